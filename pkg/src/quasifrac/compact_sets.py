"""
Compact crack sets on a geometric lattice
=========================================

Cracks are finite unions of lattice edges.  A lattice edge joins two nodes
that are 8-neighbours (axis-aligned or diagonal), so every crack is a
polyline set whose geometry is exact in floating point up to the lattice
coordinates themselves.

The module provides

- :class:`LatticeSpec` and :class:`CrackSet`, immutable value types,
- exact Hausdorff distance between finite unions of segments,
- length, connected components (union-find on shared endpoints),
- closed epsilon-neighbourhoods,
- a Golab lower-semicontinuity diagnostic for sequences of sets,
- the two midline crack families used in the stability examples.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import CrackOffLattice

# Offsets (di, dj) of the 8-neighbourhood.
_NEIGHBOURS = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1), (1, -1), (-1, 1))


@dataclass(frozen=True)
class LatticeSpec:
    """Uniform square lattice covering a closed rectangle.

    Nodes are ``origin + spacing * (i, j)`` for ``0 <= i <= nx`` and
    ``0 <= j <= ny``; the flat node index is ``j * (nx + 1) + i``.
    """

    origin: tuple[float, float]
    spacing: float
    nx: int
    ny: int

    def __post_init__(self):
        if not self.spacing > 0:
            raise ValueError("lattice spacing must be positive")
        if self.nx < 1 or self.ny < 1:
            raise ValueError("lattice needs at least one cell in each direction")
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))
        object.__setattr__(self, "spacing", float(self.spacing))
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))

    @classmethod
    def covering(cls, bounds, spacing):
        """Lattice on the rectangle ``bounds = (x0, x1, y0, y1)``.

        The side lengths must be integer multiples of ``spacing``.
        """
        x0, x1, y0, y1 = bounds
        nx = round((x1 - x0) / spacing)
        ny = round((y1 - y0) / spacing)
        if abs(nx * spacing - (x1 - x0)) > 1e-9 * max(1.0, x1 - x0) or abs(
            ny * spacing - (y1 - y0)
        ) > 1e-9 * max(1.0, y1 - y0):
            raise ValueError(f"spacing {spacing} does not divide the rectangle {bounds}")
        return cls((x0, y0), spacing, nx, ny)

    @property
    def bounds(self):
        x0, y0 = self.origin
        return (x0, x0 + self.nx * self.spacing, y0, y0 + self.ny * self.spacing)

    @property
    def diameter(self):
        x0, x1, y0, y1 = self.bounds
        return math.hypot(x1 - x0, y1 - y0)

    @property
    def num_nodes(self):
        return (self.nx + 1) * (self.ny + 1)

    def index(self, i, j):
        return j * (self.nx + 1) + i

    def ij(self, k):
        return k % (self.nx + 1), k // (self.nx + 1)

    def contains_ij(self, i, j):
        return 0 <= i <= self.nx and 0 <= j <= self.ny

    def position(self, k):
        i, j = self.ij(k)
        return (self.origin[0] + i * self.spacing, self.origin[1] + j * self.spacing)

    def positions(self, ks):
        ks = np.asarray(ks, dtype=np.int64)
        i = ks % (self.nx + 1)
        j = ks // (self.nx + 1)
        return np.stack(
            [self.origin[0] + i * self.spacing, self.origin[1] + j * self.spacing], axis=-1
        )

    def snap(self, point):
        """Nearest node index and the distance to it."""
        i = round((point[0] - self.origin[0]) / self.spacing)
        j = round((point[1] - self.origin[1]) / self.spacing)
        if not self.contains_ij(i, j):
            raise CrackOffLattice(f"point {tuple(point)} lies outside the lattice")
        x, y = self.origin[0] + i * self.spacing, self.origin[1] + j * self.spacing
        return self.index(i, j), math.hypot(point[0] - x, point[1] - y)

    def to_dict(self):
        return {
            "origin": list(self.origin),
            "spacing": self.spacing,
            "nx": self.nx,
            "ny": self.ny,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["origin"]), d["spacing"], d["nx"], d["ny"])


def _edge_key(a, b):
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class CrackSet:
    """A compact crack: a finite set of lattice edges.

    Parameters
    ----------
    lattice : LatticeSpec
        Carrier lattice.
    edges : iterable of (int, int)
        Node-index pairs of 8-neighbouring nodes.  Stored as a frozenset of
        sorted pairs, so order and orientation do not matter.
    snap_error : float
        Largest distance between a requested endpoint and the lattice node
        it was snapped to (zero for sets built directly from edges).

    Two diagonals crossing inside one lattice cell are rejected: their
    intersection is not a lattice node, which would break both the
    endpoint-based component count and mesh conformity.
    """

    lattice: LatticeSpec
    edges: frozenset = field(default_factory=frozenset)
    snap_error: float = 0.0

    def __post_init__(self):
        lat = self.lattice
        keys = set()
        for a, b in self.edges:
            a, b = int(a), int(b)
            if a == b:
                raise CrackOffLattice(f"degenerate edge ({a}, {b})")
            for k in (a, b):
                if not 0 <= k < lat.num_nodes:
                    raise CrackOffLattice(f"node {k} is outside the lattice")
            (ia, ja), (ib, jb) = lat.ij(a), lat.ij(b)
            if max(abs(ia - ib), abs(ja - jb)) != 1:
                raise CrackOffLattice(f"nodes {a} and {b} are not lattice neighbours")
            keys.add(_edge_key(a, b))
        object.__setattr__(self, "edges", frozenset(keys))
        cells = {}
        for a, b in keys:
            (ia, ja), (ib, jb) = lat.ij(a), lat.ij(b)
            if ia != ib and ja != jb:
                cell = (min(ia, ib), min(ja, jb))
                slope = (ib - ia) * (jb - ja)
                if cells.get(cell, slope) != slope:
                    raise CrackOffLattice(f"crossing diagonals in lattice cell {cell}")
                cells[cell] = slope

    # -- construction -----------------------------------------------------

    @classmethod
    def empty(cls, lattice):
        return cls(lattice, frozenset())

    @classmethod
    def from_polyline(cls, lattice, points, snap_tol=None):
        """Crack following straight lattice runs between consecutive points.

        Every consecutive pair of (snapped) points must be joined by an axis
        or diagonal lattice line.
        """
        return cls.from_segments(lattice, list(zip(points[:-1], points[1:])), snap_tol)

    @classmethod
    def from_segments(cls, lattice, segments, snap_tol=None):
        """Union of straight segments, endpoints snapped to lattice nodes.

        Raises :class:`CrackOffLattice` if an endpoint is farther than
        ``snap_tol`` (default: half a spacing) from every node, or if a
        segment is not axis-aligned or diagonal after snapping.
        """
        if snap_tol is None:
            snap_tol = 0.5 * lattice.spacing
        edges = set()
        err = 0.0
        for p, q in segments:
            a, ea = lattice.snap(p)
            b, eb = lattice.snap(q)
            err = max(err, ea, eb)
            if err > snap_tol:
                raise CrackOffLattice(
                    f"segment {tuple(p)}-{tuple(q)} needs snap error {err:.3g} > {snap_tol:.3g}"
                )
            edges.update(_lattice_run(lattice, a, b))
        return cls(lattice, frozenset(edges), err)

    def with_edges(self, extra):
        return CrackSet(self.lattice, self.edges | frozenset(_edge_key(*e) for e in extra), self.snap_error)

    def union(self, other):
        if other.lattice != self.lattice:
            raise ValueError("cannot combine cracks on different lattices")
        return CrackSet(self.lattice, self.edges | other.edges, max(self.snap_error, other.snap_error))

    def issubset(self, other):
        return self.lattice == other.lattice and self.edges <= other.edges

    def __le__(self, other):
        return self.issubset(other)

    def __len__(self):
        return len(self.edges)

    def __bool__(self):
        return bool(self.edges)

    # -- geometry ---------------------------------------------------------

    def sorted_edges(self):
        return sorted(self.edges)

    def nodes(self):
        out = set()
        for a, b in self.edges:
            out.add(a)
            out.add(b)
        return sorted(out)

    def degree(self):
        deg = {}
        for a, b in self.edges:
            deg[a] = deg.get(a, 0) + 1
            deg[b] = deg.get(b, 0) + 1
        return deg

    def segments(self):
        """Array of shape ``(n_edges, 2, 2)`` in lexicographic edge order."""
        if not self.edges:
            return np.zeros((0, 2, 2))
        e = np.array(self.sorted_edges(), dtype=np.int64)
        return self.lattice.positions(e)

    def maximal_segments(self):
        """Collinear runs of edges merged into maximal straight segments."""
        return _merge_runs(self)

    def tips(self):
        """Degree-one nodes that do not lie on the lattice boundary."""
        lat = self.lattice
        out = []
        for k, d in sorted(self.degree().items()):
            i, j = lat.ij(k)
            if d == 1 and 0 < i < lat.nx and 0 < j < lat.ny:
                out.append(k)
        return out

    # -- serialization ----------------------------------------------------

    def to_dict(self):
        return {
            "lattice": self.lattice.to_dict(),
            "edges": [list(e) for e in self.sorted_edges()],
            "snap_error": self.snap_error,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        return cls(
            LatticeSpec.from_dict(d["lattice"]),
            frozenset(tuple(e) for e in d["edges"]),
            float(d.get("snap_error", 0.0)),
        )

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _lattice_run(lattice, a, b):
    (ia, ja), (ib, jb) = lattice.ij(a), lattice.ij(b)
    di, dj = ib - ia, jb - ja
    n = max(abs(di), abs(dj))
    if n == 0:
        return []
    if not (di == 0 or dj == 0 or abs(di) == abs(dj)):
        raise CrackOffLattice(
            f"segment between nodes {a} and {b} is neither axis-aligned nor diagonal"
        )
    si, sj = (di > 0) - (di < 0), (dj > 0) - (dj < 0)
    nodes = [lattice.index(ia + s * si, ja + s * sj) for s in range(n + 1)]
    return [_edge_key(p, q) for p, q in zip(nodes[:-1], nodes[1:])]


def _merge_runs(K):
    lat = K.lattice
    edges = K.edges
    out = []
    for di, dj in ((1, 0), (0, 1), (1, 1), (1, -1)):
        step = {}
        for a, b in edges:
            (ia, ja), (ib, jb) = lat.ij(a), lat.ij(b)
            if (ib - ia, jb - ja) == (di, dj):
                step[a] = b
            elif (ia - ib, ja - jb) == (di, dj):
                step[b] = a
        starts = set(step) - set(step.values())
        for s in sorted(starts):
            e = s
            while e in step:
                e = step[e]
            out.append((lat.position(s), lat.position(e)))
    if not out:
        return np.zeros((0, 2, 2))
    return np.array(out, dtype=float)


# ---------------------------------------------------------------------------
# Point / segment distances
# ---------------------------------------------------------------------------


def as_segments(obj):
    """Coerce a CrackSet, point array ``(n, 2)`` or segment array ``(n, 2, 2)``."""
    if isinstance(obj, CrackSet):
        return obj.maximal_segments()
    arr = np.asarray(obj, dtype=float)
    if arr.size == 0:
        return np.zeros((0, 2, 2))
    if arr.ndim == 1:
        arr = arr.reshape(1, 2)
    if arr.ndim == 2:
        return np.stack([arr, arr], axis=1)
    if arr.ndim == 3 and arr.shape[1:] == (2, 2):
        return arr
    raise ValueError(f"cannot interpret array of shape {arr.shape} as segments")


def point_segment_distance(points, segments):
    """Distance matrix ``(n_points, n_segments)``."""
    p = np.asarray(points, dtype=float).reshape(-1, 2)
    s = as_segments(segments)
    if len(s) == 0:
        return np.full((len(p), 0), np.inf)
    a = s[:, 0]
    e = s[:, 1] - a
    ee = np.einsum("ij,ij->i", e, e)
    w = p[:, None, :] - a[None, :, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        tau = np.where(ee > 0, np.einsum("pij,ij->pi", w, e) / np.where(ee > 0, ee, 1.0), 0.0)
    tau = np.clip(tau, 0.0, 1.0)
    d = w - tau[..., None] * e[None, :, :]
    return np.sqrt(np.einsum("pij,pij->pi", d, d))


def distance_to_set(points, K):
    """Distance from each point to the union of segments ``K`` (inf if empty)."""
    d = point_segment_distance(points, K)
    if d.shape[1] == 0:
        return np.full(d.shape[0], np.inf)
    return d.min(axis=1)


def _sqdist_pieces(P0, D, Q0, E):
    """Squared distance from ``P0 + s D`` to segment ``Q0 + tau E``, piecewise in s.

    Returns an array ``(3, 5)`` of pieces ``(s_lo, s_hi, c2, c1, c0)`` on
    [0, 1]; empty pieces have ``s_lo > s_hi``.
    """
    w0 = P0 - Q0
    ee = E @ E
    pieces = np.full((3, 5), np.nan)
    pieces[:, 0] = 1.0
    pieces[:, 1] = 0.0

    def quad(w, dd):
        return (dd @ dd, 2.0 * (w @ dd), w @ w)

    if ee == 0.0:
        pieces[0] = (0.0, 1.0, *quad(w0, D))
        return pieces
    t0 = (w0 @ E) / ee
    t1 = (D @ E) / ee
    # interior quadratic: |w|^2 - (w.E)^2/ee with w = w0 + s D
    a2, a1, a0 = quad(w0, D)
    b1, b0 = D @ E, w0 @ E
    q_in = (a2 - b1 * b1 / ee, a1 - 2.0 * b0 * b1 / ee, a0 - b0 * b0 / ee)
    q_lo = quad(w0, D)
    q_hi = quad(w0 - E, D)
    if t1 == 0.0:
        q = q_lo if t0 <= 0 else (q_hi if t0 >= 1 else q_in)
        pieces[0] = (0.0, 1.0, *q)
        return pieces
    sa, sb = (0.0 - t0) / t1, (1.0 - t0) / t1
    if t1 > 0:
        order = ((-np.inf, sa, q_lo), (sa, sb, q_in), (sb, np.inf, q_hi))
    else:
        order = ((-np.inf, sb, q_hi), (sb, sa, q_in), (sa, np.inf, q_lo))
    for r, (lo, hi, q) in enumerate(order):
        pieces[r] = (max(lo, 0.0), min(hi, 1.0), *q)
    return pieces


def _directed_hausdorff(A, B):
    """sup over x in A of dist(x, B) for segment arrays, computed exactly.

    Along a segment of A, each distance to a segment of B is convex, so the
    lower envelope attains its maximum at an endpoint or where two distance
    functions cross.  Crossings are roots of differences of piecewise
    quadratics and are found in closed form.
    """
    best = 0.0
    for P0, P1 in A:
        D = P1 - P0
        pcs = np.array([_sqdist_pieces(P0, D, Q0, Q1 - Q0) for Q0, Q1 in B])  # (J, 3, 5)
        cands = [np.array([0.0, 1.0])]
        if len(B) > 1 and D @ D > 0:
            flat = pcs.reshape(-1, 5)
            owner = np.repeat(np.arange(len(B)), 3)
            valid = flat[:, 0] <= flat[:, 1]
            flat, owner = flat[valid], owner[valid]
            i, j = np.triu_indices(len(flat), k=1)
            keep = owner[i] != owner[j]
            i, j = i[keep], j[keep]
            lo = np.maximum(flat[i, 0], flat[j, 0])
            hi = np.minimum(flat[i, 1], flat[j, 1])
            ok = lo <= hi
            i, j, lo, hi = i[ok], j[ok], lo[ok], hi[ok]
            c = flat[i, 2:] - flat[j, 2:]
            roots = _quadratic_roots(c[:, 0], c[:, 1], c[:, 2])
            for r in roots:
                inside = np.isfinite(r) & (r >= lo - 1e-14) & (r <= hi + 1e-14)
                cands.append(np.clip(r[inside], 0.0, 1.0))
        s = np.concatenate(cands)
        pts = P0[None, :] + s[:, None] * D[None, :]
        best = max(best, float(distance_to_set(pts, B).max()))
    return best


def _quadratic_roots(a, b, c):
    """Real roots of ``a s^2 + b s + c = 0`` elementwise (nan where absent)."""
    a, b, c = map(np.asarray, (a, b, c))
    scale = np.maximum.reduce([np.abs(a), np.abs(b), np.abs(c), np.full(a.shape, 1e-300)])
    lin = np.abs(a) <= 1e-13 * scale
    disc = b * b - 4 * a * c
    disc = np.where(np.abs(disc) <= 1e-13 * (b * b + np.abs(4 * a * c)), 0.0, disc)
    sq = np.sqrt(np.where(disc >= 0, disc, np.nan))
    with np.errstate(divide="ignore", invalid="ignore"):
        # numerically stable pair
        q = -0.5 * (b + np.copysign(sq, b))
        r1 = np.where(lin, np.where(np.abs(b) > 1e-13 * scale, -c / b, np.nan), q / a)
        r2 = np.where(lin, np.nan, np.where(q != 0, c / q, r1))
    return r1, r2


def hausdorff_distance(A, B, diam=None):
    """Hausdorff distance between two finite unions of segments or points.

    Conventions for empty sets: ``d_H(empty, empty) = 0`` and
    ``d_H(empty, K) = diam`` for nonempty ``K``.  When ``diam`` is omitted
    it is taken from the lattice of a CrackSet argument.
    """
    if diam is None:
        for X in (A, B):
            if isinstance(X, CrackSet):
                diam = X.lattice.diameter
                break
    SA, SB = as_segments(A), as_segments(B)
    if len(SA) == 0 and len(SB) == 0:
        return 0.0
    if len(SA) == 0 or len(SB) == 0:
        if diam is None:
            raise ValueError("diam is required when exactly one set is empty")
        return float(diam)
    return max(_directed_hausdorff(SA, SB), _directed_hausdorff(SB, SA))


# ---------------------------------------------------------------------------
# Length and components
# ---------------------------------------------------------------------------


def crack_length(K):
    """One-dimensional measure of ``K``: the sum of its edge lengths."""
    s = K.segments()
    if len(s) == 0:
        return 0.0
    return float(np.linalg.norm(s[:, 1] - s[:, 0], axis=1).sum())


class UnionFind:
    """Disjoint sets over hashable items, with path halving and union by size."""

    def __init__(self):
        self.parent = {}
        self.size = {}

    def add(self, x):
        if x not in self.parent:
            self.parent[x] = x
            self.size[x] = 1

    def find(self, x):
        self.add(x)
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]


@dataclass(frozen=True)
class ComponentLabeling:
    """Component id per edge; ids are 0..count-1 in order of the smallest edge."""

    labels: dict
    count: int

    def components(self):
        out = [[] for _ in range(self.count)]
        for e, c in sorted(self.labels.items()):
            out[c].append(e)
        return out


def connected_components(K):
    uf = UnionFind()
    for a, b in K.edges:
        uf.union(a, b)
    ids = {}
    labels = {}
    for e in K.sorted_edges():
        r = uf.find(e[0])
        if r not in ids:
            ids[r] = len(ids)
        labels[e] = ids[r]
    return ComponentLabeling(labels, len(ids))


def component_count(K):
    return connected_components(K).count


# ---------------------------------------------------------------------------
# Dilation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Dilation:
    """Closed ``eps``-neighbourhood of a segment union, as a membership test."""

    segments: np.ndarray
    eps: float
    tol: float = 1e-12

    def contains(self, points):
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        if len(self.segments) == 0:
            return np.zeros(len(pts), dtype=bool)
        return distance_to_set(pts, self.segments) <= self.eps + self.tol

    def __contains__(self, point):
        return bool(self.contains(point)[0])


def dilate(K, eps):
    if eps < 0:
        raise ValueError("eps must be non-negative")
    return Dilation(as_segments(K), float(eps))


# ---------------------------------------------------------------------------
# Golab semicontinuity diagnostic
# ---------------------------------------------------------------------------


def _clip_length(segments, U):
    """Length of the part of each segment inside the open rectangle U."""
    if U is None:
        return np.linalg.norm(segments[:, 1] - segments[:, 0], axis=1).sum() if len(segments) else 0.0
    x0, x1, y0, y1 = U
    total = 0.0
    for P, Q in segments:
        d = Q - P
        L = math.hypot(*d)
        if L == 0:
            continue
        lo, hi = 0.0, 1.0
        inside = True
        for p, q in ((-d[0], P[0] - x0), (d[0], x1 - P[0]), (-d[1], P[1] - y0), (d[1], y1 - P[1])):
            if p == 0:
                if q <= 0:  # parallel and on or outside an open boundary line
                    inside = False
                    break
                continue
            r = q / p
            if p < 0:
                lo = max(lo, r)
            else:
                hi = min(hi, r)
        if inside and hi > lo:
            total += (hi - lo) * L
    return float(total)


def length_in(K, U=None):
    """``H^1(K ∩ U)`` for an open rectangle ``U = (x0, x1, y0, y1)``; all of K if None."""
    return _clip_length(as_segments(K), U)


@dataclass(frozen=True)
class GolabReport:
    lengths: tuple
    limit_length: float
    liminf_estimate: float
    corrected_liminf: float
    hausdorff: tuple
    max_components: int
    semicontinuous: bool


def golab_report(sequence: Sequence[CrackSet], K_limit, U=None, tail=None, tol=1e-9):
    """Compare ``H^1(K_limit ∩ U)`` with the lengths of a converging sequence.

    The liminf is estimated over the last ``tail`` sets (default: last half).
    Because a finite sequence only approaches its limit, each length is
    credited with ``2 c d_H(K_n, K_limit)``, with ``c`` the number of
    components of the limit: a connected set within Hausdorff distance
    ``eps`` of a segment is at least ``2 eps`` shorter than it.  Sequences
    with unbounded component counts (the oscillating family) still fail,
    since their length deficit does not shrink with ``d_H``.
    """
    if not sequence:
        raise ValueError("sequence must be nonempty")
    if tail is None:
        tail = max(1, len(sequence) // 2)
    lengths = tuple(length_in(K, U) for K in sequence)
    dists = tuple(hausdorff_distance(K, K_limit) for K in sequence)
    L = length_in(K_limit, U)
    c = component_count(K_limit) if isinstance(K_limit, CrackSet) else len(as_segments(K_limit))
    raw = min(lengths[-tail:])
    corrected = min(l + 2 * c * d for l, d in zip(lengths[-tail:], dists[-tail:]))
    counts = [component_count(K) for K in sequence if isinstance(K, CrackSet)]
    return GolabReport(
        lengths=lengths,
        limit_length=L,
        liminf_estimate=raw,
        corrected_liminf=corrected,
        hausdorff=dists,
        max_components=max(counts) if counts else 0,
        semicontinuous=bool(L <= corrected + tol),
    )


# ---------------------------------------------------------------------------
# Midline crack families on (0, 1) x (-1, 1)
# ---------------------------------------------------------------------------

UNIT_STRIP = (0.0, 1.0, -1.0, 1.0)


def strip_lattice(spacing):
    """Lattice on the strip ``(0, 1) x (-1, 1)``."""
    return LatticeSpec.covering(UNIT_STRIP, spacing)


def _midline_family(intervals, lattice, snap_tol, n):
    K = CrackSet.from_segments(
        lattice, [((a, 0.0), (b, 0.0)) for a, b in intervals], snap_tol=snap_tol
    )
    if component_count(K) != n or any(
        abs(round((b - a) / lattice.spacing)) == 0 for a, b in intervals
    ):
        raise CrackOffLattice(
            f"n={n}: lattice spacing {lattice.spacing:.4g} merges or collapses segments"
        )
    return K


def oscillating_crack(n, lattice=None, snap_tol=None):
    """``n`` midline segments ``[i/n, i/n + 1/(2n)] x {0}``.

    Default lattice spacing is ``1/(2n)``, which represents the set exactly.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    lattice = lattice or strip_lattice(1.0 / (2 * n))
    iv = [(i / n, i / n + 1.0 / (2 * n)) for i in range(n)]
    return _midline_family(iv, lattice, snap_tol, n)


def packed_crack(n, lattice=None, snap_tol=None):
    """``n`` midline segments ``[i/n, (i+1)/n - exp(-n)] x {0}``.

    The gap ``exp(-n)`` is snapped to the lattice; the snapping error is
    kept in ``snap_error``.  The default spacing is the largest ``1/(n k)``
    not exceeding the gap, so every gap spans at least one lattice cell.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if lattice is None:
        k = max(1, math.ceil(1.0 / (n * math.exp(-n))))
        lattice = strip_lattice(1.0 / (n * k))
    gap = math.exp(-n)
    iv = [(i / n, (i + 1) / n - gap) for i in range(n)]
    return _midline_family(iv, lattice, snap_tol, n)


def midline_segment(a, b, lattice):
    """``[a, b] x {0}`` on ``lattice``."""
    return CrackSet.from_segments(lattice, [((a, 0.0), (b, 0.0))])
