"""
Conforming triangulations of a rectangle minus a lattice crack.

The mesh is a tensor-product grid whose lines contain every crack node,
split into right triangles.  Cells crossed by a diagonal crack edge are
split along that diagonal, so the crack is a union of mesh edges by
construction.  Around each crack node the incident triangles are grouped
into sectors that can be reached from one another without crossing a crack
edge; every sector after the first receives its own copy of the node.
Interior crack points therefore carry two values (one per face), tips keep
a single node, and a crack reaching the outer boundary splits the boundary
there.

Refinement boxes refine the grid lines crossing them (the whole strip in
each axis direction), which is how tips and thin gaps are resolved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components as _cc

from .compact_sets import CrackSet, UnionFind, point_segment_distance
from .errors import ConfigError, CrackOffLattice, MeshFailure

SIDES = ("bottom", "right", "top", "left")

DIRICHLET, NEUMANN, CRACK = 0, 1, 2
TAG_NAMES = {DIRICHLET: "dirichlet", NEUMANN: "neumann", CRACK: "crack"}


@dataclass(frozen=True)
class BoundaryInterval:
    """Relatively open interval ``(lo, hi)`` on one side of the rectangle.

    The coordinate is ``x`` on bottom/top and ``y`` on left/right.
    """

    side: str
    lo: float
    hi: float


@dataclass(frozen=True)
class DomainSpec:
    """Rectangle ``(x0, x1) x (y0, y1)`` with a Dirichlet part of its boundary.

    The Neumann part is the complement of the closure of the Dirichlet part.
    """

    bounds: tuple
    dirichlet: tuple = ()

    def __post_init__(self):
        x0, x1, y0, y1 = map(float, self.bounds)
        if not (x1 > x0 and y1 > y0):
            raise ConfigError("domain.bounds", f"empty rectangle {self.bounds}")
        object.__setattr__(self, "bounds", (x0, x1, y0, y1))
        ivs = tuple(
            iv if isinstance(iv, BoundaryInterval) else BoundaryInterval(*iv) for iv in self.dirichlet
        )
        for k, iv in enumerate(ivs):
            name = f"dirichlet[{k}]"
            if iv.side not in SIDES:
                raise ConfigError(name, f"unknown side {iv.side!r}")
            a, b = self.side_range(iv.side)
            if not (a - 1e-12 <= iv.lo < iv.hi <= b + 1e-12):
                raise ConfigError(name, f"interval ({iv.lo}, {iv.hi}) not inside side {iv.side} = [{a}, {b}]")
        for k, iv in enumerate(ivs):
            for l in range(k):
                jv = ivs[l]
                if iv.side == jv.side and iv.lo < jv.hi and jv.lo < iv.hi:
                    raise ConfigError(
                        f"dirichlet[{k}]",
                        f"interval {iv.side} ({iv.lo}, {iv.hi}) overlaps dirichlet[{l}] ({jv.lo}, {jv.hi})",
                    )
        object.__setattr__(self, "dirichlet", ivs)

    @classmethod
    def rectangle(cls, bounds, dirichlet_sides=("bottom", "right", "top", "left")):
        """Rectangle whose Dirichlet part is the union of whole sides."""
        d = cls(bounds)
        return cls(bounds, tuple(BoundaryInterval(s, *d.side_range(s)) for s in dirichlet_sides))

    def side_range(self, side):
        x0, x1, y0, y1 = self.bounds
        return (x0, x1) if side in ("bottom", "top") else (y0, y1)

    @property
    def area(self):
        x0, x1, y0, y1 = self.bounds
        return (x1 - x0) * (y1 - y0)

    @property
    def diameter(self):
        x0, x1, y0, y1 = self.bounds
        return math.hypot(x1 - x0, y1 - y0)

    def on_dirichlet(self, points, tol=1e-12):
        """Whether each boundary point lies in the (open) Dirichlet part."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        x0, x1, y0, y1 = self.bounds
        s = tol * max(x1 - x0, y1 - y0)
        out = np.zeros(len(p), dtype=bool)
        for iv in self.dirichlet:
            if iv.side == "bottom":
                on, c = np.abs(p[:, 1] - y0) <= s, p[:, 0]
            elif iv.side == "top":
                on, c = np.abs(p[:, 1] - y1) <= s, p[:, 0]
            elif iv.side == "left":
                on, c = np.abs(p[:, 0] - x0) <= s, p[:, 1]
            else:
                on, c = np.abs(p[:, 0] - x1) <= s, p[:, 1]
            out |= on & (c > iv.lo + s) & (c < iv.hi - s)
        return out

    def to_dict(self):
        return {
            "bounds": list(self.bounds),
            "dirichlet": [{"side": iv.side, "interval": [iv.lo, iv.hi]} for iv in self.dirichlet],
        }


@dataclass(frozen=True)
class SlitMesh:
    """Triangulation of the domain minus a crack, with duplicated crack nodes.

    Attributes
    ----------
    nodes : (N, 2) float array
    triangles : (T, 3) int array, counter-clockwise
    orig : (N,) int array
        Grid node each mesh node was copied from (identity for grid nodes).
    slit_map : dict
        Grid node -> tuple of its copies, for crack nodes with more than one
        copy.  Two-copy entries are ordered ``(plus, minus)``; the plus copy
        sits on the side of ``R t`` where ``t`` is the crack tangent oriented
        towards increasing x (increasing y for vertical cracks).
    boundary_edges : (B, 2) int array
    boundary_tags : (B,) int array of DIRICHLET / NEUMANN / CRACK
    boundary_tri : (B,) int array, owning triangle of each boundary edge
    dirichlet_nodes : sorted int array
    crack_nodes : sorted int array of grid nodes lying on the crack
    crack_edges : frozenset of grid-node pairs forming the crack
    """

    domain: DomainSpec
    crack: CrackSet | None
    h: float
    xs: np.ndarray
    ys: np.ndarray
    nodes: np.ndarray
    triangles: np.ndarray
    orig: np.ndarray
    slit_map: dict
    boundary_edges: np.ndarray
    boundary_tags: np.ndarray
    boundary_tri: np.ndarray
    dirichlet_nodes: np.ndarray
    crack_nodes: np.ndarray
    crack_edges: frozenset
    min_angle: float
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def num_nodes(self):
        return len(self.nodes)

    @property
    def num_grid_nodes(self):
        return len(self.xs) * len(self.ys)

    def areas(self):
        if "areas" not in self._cache:
            p = self.nodes[self.triangles]
            d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
            self._cache["areas"] = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
        return self._cache["areas"]

    def basis_gradients(self):
        """Per-triangle gradients of the three barycentric basis functions, ``(T, 3, 2)``."""
        if "grads" not in self._cache:
            p = self.nodes[self.triangles]
            a = self.areas()
            # grad(lambda_k) = R^T (p_{k+2} - p_{k+1}) / (2 area), rotated edge opposite k
            e = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
            g = np.stack([-e[..., 1], e[..., 0]], axis=-1) / (2.0 * a[:, None, None])
            self._cache["grads"] = g
        return self._cache["grads"]

    def components(self):
        """Connected components of the mesh graph: ``(count, label per node)``."""
        if "components" not in self._cache:
            t = self.triangles
            i = np.concatenate([t[:, 0], t[:, 1], t[:, 2]])
            j = np.concatenate([t[:, 1], t[:, 2], t[:, 0]])
            n = self.num_nodes
            adj = coo_matrix((np.ones(len(i)), (i, j)), shape=(n, n))
            self._cache["components"] = _cc(adj, directed=False)
        return self._cache["components"]

    def unslit(self):
        """Same grid and triangulation with every copy merged back into its grid node."""
        if "unslit" not in self._cache:
            n0 = self.num_grid_nodes
            tri = self.orig[self.triangles]
            m = _assemble(
                self.domain, None, self.h, self.xs, self.ys, self.nodes[:n0], tri,
                frozenset(), self.min_angle,
            )
            self._cache["unslit"] = m
        return self._cache["unslit"]

    def copy_side(self):
        """Side label per node: '+' / '-' for two-copy crack nodes, 'tip' for
        single-copy crack nodes, 'junction' for others on the crack, '' elsewhere."""
        side = np.array([""] * self.num_nodes, dtype=object)
        for k in self.crack_nodes:
            side[k] = "tip"
        for k, copies in self.slit_map.items():
            if len(copies) == 2:
                side[copies[0]], side[copies[1]] = "+", "-"
            else:
                for c in copies:
                    side[c] = "junction"
        return side


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------


def _merge_lines(values, priority, tol):
    order = np.lexsort((-priority, values))
    v, pr = values[order], priority[order]
    out = []
    best = None
    for x, p in zip(v, pr):
        if best is not None and x - best[2] <= tol:
            if p > best[1]:
                best = (x, p, best[2])
            continue
        if best is not None:
            out.append(best[0])
        best = (x, p, x)
    out.append(best[0])
    return np.array(out)


def _axis_lines(lo, hi, h, refinements, forced):
    n = max(1, round((hi - lo) / h))
    hb = (hi - lo) / n
    vals = [lo + hb * np.arange(n + 1)]
    for a, b, f in refinements:
        fine = hb / f
        k0 = math.ceil((max(a, lo) - lo) / fine - 1e-9)
        k1 = math.floor((min(b, hi) - lo) / fine + 1e-9)
        if k1 >= k0:
            vals.append(lo + fine * np.arange(k0, k1 + 1))
    base = np.concatenate(vals)
    forced = np.asarray(sorted(forced), dtype=float)
    allv = np.concatenate([base, forced, [lo, hi]])
    pr = np.concatenate([np.zeros(len(base)), np.ones(len(forced)), [2, 2]])
    lines = _merge_lines(allv, pr, 1e-9 * (hi - lo))
    return lines[(lines >= lo - 1e-12) & (lines <= hi + 1e-12)]


def _locate(lines, v, tol):
    k = int(np.searchsorted(lines, v - tol))
    if k < len(lines) and abs(lines[k] - v) <= tol:
        return k
    raise CrackOffLattice(f"coordinate {v} is not a grid line")


def _diagonal_cells(K):
    """Diagonal lattice edges as ``(cx0, cy0, s, slope)`` in coordinates."""
    lat = K.lattice
    out = []
    for a, b in K.sorted_edges():
        (ia, ja), (ib, jb) = lat.ij(a), lat.ij(b)
        if ia != ib and ja != jb:
            cx = lat.origin[0] + min(ia, ib) * lat.spacing
            cy = lat.origin[1] + min(ja, jb) * lat.spacing
            out.append((cx, cy, lat.spacing, (ib - ia) * (jb - ja)))
    return out


def _square_diagonals(xs, ys, diags, tol):
    """Add lines so each diagonal-crack cell is subdivided into squares along its diagonal."""
    for _ in range(50):
        changed = False
        for cx, cy, s, _slope in diags:
            ox = xs[(xs > cx + tol) & (xs < cx + s - tol)] - cx
            oy = ys[(ys > cy + tol) & (ys < cy + s - tol)] - cy
            allo = _merge_lines(
                np.concatenate([ox, oy, [0.0]]), np.zeros(len(ox) + len(oy) + 1), tol
            )[1:]
            if len(allo) != len(ox) or len(allo) != len(oy) or (
                len(allo) and (np.abs(allo - ox).max() > tol or np.abs(allo - oy).max() > tol)
            ):
                xs = np.union1d(xs, cx + allo)
                ys = np.union1d(ys, cy + allo)
                xs = _merge_lines(xs, np.zeros(len(xs)), tol)
                ys = _merge_lines(ys, np.zeros(len(ys)), tol)
                changed = True
        if not changed:
            return xs, ys
    raise MeshFailure("could not make diagonal crack cells square")


def build_mesh(domain, K=None, h=0.1, refinement_boxes=None, min_angle=2.0):
    """Slit mesh of ``domain`` minus the crack ``K``.

    Parameters
    ----------
    domain : DomainSpec
    K : CrackSet or None
        Crack; its lattice must lie inside the closed rectangle.
    h : float
        Nominal element size away from refinement boxes.
    refinement_boxes : list of ((x0, x1, y0, y1), factor)
        Grid lines crossing each box are refined to spacing ``h / factor``.
    min_angle : float
        Floor on the smallest triangle angle, in degrees.

    Raises
    ------
    MeshFailure
        If the angle floor is violated or a crack edge cannot be opened.
    CrackOffLattice
        If a crack node lies outside the domain.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    x0, x1, y0, y1 = domain.bounds
    boxes = list(refinement_boxes or [])
    for box, f in boxes:
        if f < 1:
            raise ValueError("refinement factors must be >= 1")
    K = K if K is not None and len(K) else None
    fx, fy, diags = [], [], []
    if K is not None:
        pos = K.lattice.positions(K.nodes())
        tol = 1e-9 * domain.diameter
        if (pos[:, 0] < x0 - tol).any() or (pos[:, 0] > x1 + tol).any() or (
            pos[:, 1] < y0 - tol
        ).any() or (pos[:, 1] > y1 + tol).any():
            raise CrackOffLattice("crack nodes lie outside the domain")
        fx, fy = pos[:, 0], pos[:, 1]
        diags = _diagonal_cells(K)
    xs = _axis_lines(x0, x1, h, [(b[0], b[1], f) for b, f in boxes], fx)
    ys = _axis_lines(y0, y1, h, [(b[2], b[3], f) for b, f in boxes], fy)
    tol = 1e-9 * domain.diameter
    if diags:
        xs, ys = _square_diagonals(xs, ys, diags, tol)

    nxl, nyl = len(xs), len(ys)
    gx, gy = np.meshgrid(xs, ys)
    nodes = np.stack([gx.ravel(), gy.ravel()], axis=1)

    def nid(i, j):
        return j * nxl + i

    # cell diagonal directions: +1 means '/', -1 means '\'
    direction = np.ones((nyl - 1, nxl - 1), dtype=np.int8)
    crack_edges = set()
    if K is not None:
        lat = K.lattice
        for a, b in K.sorted_edges():
            pa, pb = lat.position(a), lat.position(b)
            ia, ja = _locate(xs, pa[0], tol), _locate(ys, pa[1], tol)
            ib, jb = _locate(xs, pb[0], tol), _locate(ys, pb[1], tol)
            if ja == jb:
                for i in range(min(ia, ib), max(ia, ib)):
                    crack_edges.add(tuple(sorted((nid(i, ja), nid(i + 1, ja)))))
            elif ia == ib:
                for j in range(min(ja, jb), max(ja, jb)):
                    crack_edges.add(tuple(sorted((nid(ia, j), nid(ia, j + 1)))))
            else:
                if ia > ib:
                    ia, ja, ib, jb = ib, jb, ia, ja
                sj = 1 if jb > ja else -1
                if ib - ia != abs(jb - ja):
                    raise MeshFailure(f"diagonal crack edge {a}-{b} is not on cell diagonals")
                for k in range(ib - ia):
                    i, j = ia + k, ja + k * sj
                    jc = j if sj > 0 else j - 1
                    direction[jc, i] = sj
                    crack_edges.add(tuple(sorted((nid(i, j), nid(i + 1, j + sj)))))

    ii, jj = np.meshgrid(np.arange(nxl - 1), np.arange(nyl - 1))
    p00 = nid(ii, jj).ravel()
    p10 = nid(ii + 1, jj).ravel()
    p01 = nid(ii, jj + 1).ravel()
    p11 = nid(ii + 1, jj + 1).ravel()
    slash = direction.ravel() > 0
    t1 = np.where(slash[:, None], np.stack([p00, p10, p11], 1), np.stack([p00, p10, p01], 1))
    t2 = np.where(slash[:, None], np.stack([p00, p11, p01], 1), np.stack([p10, p11, p01], 1))
    tri = np.empty((2 * len(p00), 3), dtype=np.int64)
    tri[0::2], tri[1::2] = t1, t2
    return _assemble(domain, K, h, xs, ys, nodes, tri, frozenset(crack_edges), min_angle)


def _triangle_min_angles(nodes, tri):
    p = nodes[tri]
    out = np.full(len(tri), np.pi)
    for k in range(3):
        u = p[:, (k + 1) % 3] - p[:, k]
        v = p[:, (k + 2) % 3] - p[:, k]
        c = np.einsum("ij,ij->i", u, v) / (np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1))
        out = np.minimum(out, np.arccos(np.clip(c, -1.0, 1.0)))
    return np.degrees(out)


def _assemble(domain, K, h, xs, ys, nodes, tri, crack_edges, min_angle):
    angles = _triangle_min_angles(nodes, tri)
    if angles.min() < min_angle:
        raise MeshFailure(
            f"smallest angle {angles.min():.3g} deg below floor {min_angle} deg at h={h}"
        )
    n0 = len(nodes)
    crack_nodes = sorted({k for e in crack_edges for k in e})

    # node -> incident triangles
    flat = tri.ravel()
    order = np.argsort(flat, kind="stable")
    starts = np.searchsorted(flat[order], np.arange(n0 + 1))
    new_tri = tri.copy()
    orig = list(range(n0))
    new_nodes = [nodes]
    slit_map = {}
    extra = 0
    for p in crack_nodes:
        inc = order[starts[p] : starts[p + 1]] // 3
        uf = UnionFind()
        for t in inc:
            uf.add(int(t))
        # triangles sharing a non-crack edge (p, q) belong to the same sector
        owners = {}
        for t in inc:
            for q in tri[t]:
                if q != p:
                    owners.setdefault(int(q), []).append(int(t))
        for q, ts in owners.items():
            if len(ts) == 2 and (min(p, q), max(p, q)) not in crack_edges:
                uf.union(ts[0], ts[1])
        sectors = {}
        for t in sorted(int(t) for t in inc):
            sectors.setdefault(uf.find(t), []).append(t)
        groups = list(sectors.values())
        if len(groups) < 2:
            continue
        groups = _order_sectors(p, groups, nodes, tri, crack_edges)
        copies = []
        for g_idx, ts in enumerate(groups):
            if g_idx == 0:
                c = p
            else:
                c = n0 + extra
                extra += 1
                orig.append(p)
                new_nodes.append(nodes[p : p + 1])
            copies.append(c)
            for t in ts:
                new_tri[t][tri[t] == p] = c
        slit_map[p] = tuple(copies)
    all_nodes = np.concatenate(new_nodes, axis=0)
    orig = np.array(orig, dtype=np.int64)

    for a, b in crack_edges:
        if a not in slit_map and b not in slit_map and _interior_pair(a, b, nodes, domain):
            raise MeshFailure(
                f"crack mesh edge {a}-{b} has no duplicated endpoint; refine h so cracks open"
            )

    # boundary edges: edges used by exactly one triangle
    e = np.concatenate([new_tri[:, [0, 1]], new_tri[:, [1, 2]], new_tri[:, [2, 0]]])
    owner = np.tile(np.arange(len(new_tri)), 3)
    key = np.sort(e, axis=1)
    uniq, inv, cnt = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    inv = inv.ravel()
    once = cnt[inv] == 1
    bedges, btri = e[once], owner[once]
    bo = orig[bedges]
    is_crack = np.array(
        [(min(a, b), max(a, b)) in crack_edges for a, b in bo], dtype=bool
    ) if len(bo) else np.zeros(0, bool)
    mid = 0.5 * (all_nodes[bedges[:, 0]] + all_nodes[bedges[:, 1]])
    dmask = domain.on_dirichlet(mid) & ~is_crack
    tags = np.where(is_crack, CRACK, np.where(dmask, DIRICHLET, NEUMANN)).astype(np.int8)
    srt = np.lexsort((bedges[:, 1], bedges[:, 0]))
    bedges, btri, tags = bedges[srt], btri[srt], tags[srt]

    dn = np.unique(bedges[tags == DIRICHLET].ravel()) if (tags == DIRICHLET).any() else np.zeros(0, np.int64)
    on_crack = np.isin(orig[dn], np.array(crack_nodes, dtype=np.int64))
    dn = dn[~on_crack]

    return SlitMesh(
        domain=domain,
        crack=K,
        h=float(h),
        xs=np.asarray(xs),
        ys=np.asarray(ys),
        nodes=all_nodes,
        triangles=new_tri,
        orig=orig,
        slit_map=slit_map,
        boundary_edges=bedges,
        boundary_tags=tags,
        boundary_tri=btri,
        dirichlet_nodes=dn.astype(np.int64),
        crack_nodes=np.array(crack_nodes, dtype=np.int64),
        crack_edges=crack_edges,
        min_angle=float(min_angle),
    )


def _interior_pair(a, b, nodes, domain):
    x0, x1, y0, y1 = domain.bounds
    tol = 1e-12 * domain.diameter

    def inside(k):
        x, y = nodes[k]
        return x0 + tol < x < x1 - tol and y0 + tol < y < y1 - tol

    return inside(a) and inside(b)


def crack_tangent(p, nodes, crack_edges):
    """Unit tangent of the crack at grid node ``p``, oriented towards +x (then +y)."""
    nbrs = [b if a == p else a for a, b in crack_edges if p in (a, b)]
    if len(nbrs) >= 2:
        t = nodes[nbrs[1]] - nodes[nbrs[0]]
    else:
        t = nodes[nbrs[0]] - nodes[p]
    t = t / np.linalg.norm(t)
    if t[0] < -1e-12 or (abs(t[0]) <= 1e-12 and t[1] < 0):
        t = -t
    return t


def _order_sectors(p, groups, nodes, tri, crack_edges):
    cent = [nodes[tri[ts]].reshape(-1, 2).mean(axis=0) - nodes[p] for ts in groups]
    if len(groups) == 2:
        t = crack_tangent(p, nodes, [e for e in crack_edges if p in e])
        n = np.array([-t[1], t[0]])
        if cent[0] @ n < cent[1] @ n:
            groups = groups[::-1]
        return groups
    ang = [math.atan2(c[1], c[0]) for c in cent]
    return [g for _, g in sorted(zip(ang, groups), key=lambda z: z[0])]


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass
class CheckResult:
    passed: bool
    offenders: list = field(default_factory=list)
    detail: str = ""


@dataclass
class MeshReport:
    checks: dict

    @property
    def passed(self):
        return all(c.passed for c in self.checks.values())

    def failed(self):
        return [k for k, c in self.checks.items() if not c.passed]


def validate_mesh(mesh, raster_check=False):
    """Check the structural invariants of a slit mesh; never raises."""
    checks = {}
    a = mesh.areas()
    bad = np.nonzero(a <= 0)[0]
    checks["orientation"] = CheckResult(len(bad) == 0, bad[:20].tolist())

    ang = _triangle_min_angles(mesh.nodes, mesh.triangles)
    bad = np.nonzero(ang < mesh.min_angle)[0]
    checks["min_angle"] = CheckResult(len(bad) == 0, bad[:20].tolist(), f"min {ang.min():.3g} deg")

    rel = abs(a.sum() - mesh.domain.area) / mesh.domain.area
    checks["area"] = CheckResult(rel <= 1e-10, [], f"relative error {rel:.2e}")

    # crack conformity: every crack edge is an edge of some triangle (in grid ids)
    tri0 = mesh.orig[mesh.triangles]
    e0 = np.sort(np.concatenate([tri0[:, [0, 1]], tri0[:, [1, 2]], tri0[:, [2, 0]]]), axis=1)
    have = set(map(tuple, np.unique(e0, axis=0).tolist()))
    missing = [e for e in sorted(mesh.crack_edges) if e not in have]
    checks["crack_conformity"] = CheckResult(not missing, missing[:20])

    # side consistency: neighbours across a non-crack edge share node copies,
    # neighbours across a crack edge use different copies of its interior nodes
    e_new = np.concatenate(
        [mesh.triangles[:, [0, 1]], mesh.triangles[:, [1, 2]], mesh.triangles[:, [2, 0]]]
    )
    e_old = np.concatenate([tri0[:, [0, 1]], tri0[:, [1, 2]], tri0[:, [2, 0]]])
    owner = np.tile(np.arange(len(tri0)), 3)
    ko = np.sort(e_old, axis=1)
    kn = np.sort(e_new, axis=1)
    order = np.lexsort((ko[:, 1], ko[:, 0]))
    ko, kn, ow = ko[order], kn[order], owner[order]
    same = (ko[1:] == ko[:-1]).all(axis=1)
    offenders = []
    for r in np.nonzero(same)[0]:
        edge = tuple(ko[r].tolist())
        is_crack = edge in mesh.crack_edges
        agree = (kn[r] == kn[r + 1]).all()
        if not is_crack and not agree:
            offenders.append((int(ow[r]), int(ow[r + 1])))
        if is_crack and agree:
            offenders.append((int(ow[r]), int(ow[r + 1])))
    checks["side_consistency"] = CheckResult(not offenders, offenders[:20])

    # copies: interior crack nodes of crack degree d >= 2 have d copies, tips one
    deg = {}
    for u, v in mesh.crack_edges:
        deg[u] = deg.get(u, 0) + 1
        deg[v] = deg.get(v, 0) + 1
    x0, x1, y0, y1 = mesh.domain.bounds
    tol = 1e-12 * mesh.domain.diameter
    bad = []
    for p, d in deg.items():
        x, y = mesh.nodes[p]
        interior = x0 + tol < x < x1 - tol and y0 + tol < y < y1 - tol
        ncopy = len(mesh.slit_map.get(p, (p,)))
        if interior and ncopy != (d if d >= 2 else 1):
            bad.append(p)
        used = {c for c in mesh.slit_map.get(p, (p,))}
        if interior and d >= 2 and len(used & set(np.unique(mesh.triangles).tolist())) != ncopy:
            bad.append(p)
    checks["slit_copies"] = CheckResult(not bad, sorted(set(bad))[:20])

    # Dirichlet nodes never sit on the crack
    on = np.isin(mesh.orig[mesh.dirichlet_nodes], mesh.crack_nodes)
    checks["boundary_split"] = CheckResult(
        not on.any(), mesh.dirichlet_nodes[on].tolist()[:20]
    )

    if raster_check:
        n_mesh = mesh.components()[0]
        n_raster = raster_components(mesh.domain, mesh.crack, mesh.h / 4)
        checks["connectivity"] = CheckResult(
            n_mesh == n_raster, [], f"mesh {n_mesh} vs raster {n_raster}"
        )
    return MeshReport(checks)


def raster_components(domain, K, resolution):
    """Components of the domain minus K by flood fill on a pixel grid.

    Neighbouring pixel centres are linked unless the segment between them
    meets a crack segment.  Independent of the mesh construction.
    """
    x0, x1, y0, y1 = domain.bounds
    nx = max(1, round((x1 - x0) / resolution))
    ny = max(1, round((y1 - y0) / resolution))
    cx = x0 + (np.arange(nx) + 0.5) * (x1 - x0) / nx
    cy = y0 + (np.arange(ny) + 0.5) * (y1 - y0) / ny
    X, Y = np.meshgrid(cx, cy)
    idx = np.arange(nx * ny).reshape(ny, nx)
    pairs = [
        (idx[:, :-1].ravel(), idx[:, 1:].ravel()),
        (idx[:-1, :].ravel(), idx[1:, :].ravel()),
    ]
    P = np.stack([X.ravel(), Y.ravel()], axis=1)
    segs = K.segments() if K is not None and len(K) else np.zeros((0, 2, 2))
    rows, cols = [], []
    for a, b in pairs:
        keep = np.ones(len(a), dtype=bool)
        if len(segs):
            keep = ~_segments_cross(P[a], P[b], segs)
        rows.append(a[keep])
        cols.append(b[keep])
    r, c = np.concatenate(rows), np.concatenate(cols)
    n = nx * ny
    adj = coo_matrix((np.ones(len(r)), (r, c)), shape=(n, n))
    labels = _cc(adj, directed=False)[1]
    # pixel centres lying on the crack belong to K, not to the domain minus K
    off = np.ones(n, dtype=bool)
    if len(segs):
        off = point_segment_distance(P, segs).min(axis=1) > 1e-9 * resolution
    return len(np.unique(labels[off]))


def _segments_cross(A, B, segs):
    """Whether segment A[i]-B[i] meets any crack segment (closed test)."""
    out = np.zeros(len(A), dtype=bool)
    for P, Q in segs:
        d = Q - P

        def orient(u, v, w):
            return (v[..., 0] - u[..., 0]) * (w[..., 1] - u[..., 1]) - (v[..., 1] - u[..., 1]) * (
                w[..., 0] - u[..., 0]
            )

        o1 = orient(A, B, P[None, :])
        o2 = orient(A, B, Q[None, :])
        o3 = orient(P[None, :], Q[None, :], A)
        o4 = orient(P[None, :], Q[None, :], B)
        out |= (o1 * o2 <= 0) & (o3 * o4 <= 0) & (np.abs(d).sum() > 0)
    return out


def tip_refinement_boxes(K, radius, factor=4, levels=2):
    """Nested refinement boxes around the tips of ``K``.

    Level ``l`` (1-based) has half-width ``radius / factor**(l-1)`` and
    refinement factor ``factor**l``.
    """
    boxes = []
    for p in K.tips():
        x, y = K.lattice.position(p)
        for l in range(1, levels + 1):
            r = radius / factor ** (l - 1)
            boxes.append(((x - r, x + r, y - r, y + r), factor**l))
    return boxes


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------


def export_mesh(mesh, path):
    """Write a plain-text node/triangle/boundary file (0-based indices).

    Layout::

        # quasifrac slit mesh v1; indices are 0-based
        nodes <N>
        <index> <x> <y> <grid node>
        triangles <T>
        <index> <a> <b> <c>
        boundary <B>
        <index> <a> <b> <tag>
    """
    with open(path, "w") as f:
        f.write("# quasifrac slit mesh v1; indices are 0-based\n")
        f.write(f"nodes {mesh.num_nodes}\n")
        for k, ((x, y), o) in enumerate(zip(mesh.nodes, mesh.orig)):
            f.write(f"{k} {x:.17g} {y:.17g} {o}\n")
        f.write(f"triangles {len(mesh.triangles)}\n")
        for k, (a, b, c) in enumerate(mesh.triangles):
            f.write(f"{k} {a} {b} {c}\n")
        f.write(f"boundary {len(mesh.boundary_edges)}\n")
        for k, ((a, b), t) in enumerate(zip(mesh.boundary_edges, mesh.boundary_tags)):
            f.write(f"{k} {a} {b} {TAG_NAMES[int(t)]}\n")


def read_mesh_file(path):
    """Parse a file written by :func:`export_mesh` into plain arrays."""
    with open(path) as f:
        lines = [l.split() for l in f if not l.startswith("#")]
    out = {}
    k = 0
    while k < len(lines):
        name, n = lines[k][0], int(lines[k][1])
        rows = lines[k + 1 : k + 1 + n]
        if name == "nodes":
            out["nodes"] = np.array([[float(r[1]), float(r[2])] for r in rows])
            out["orig"] = np.array([int(r[3]) for r in rows])
        elif name == "triangles":
            out["triangles"] = np.array([[int(x) for x in r[1:]] for r in rows])
        else:
            out["boundary_edges"] = np.array([[int(r[1]), int(r[2])] for r in rows])
            out["boundary_tags"] = [r[3] for r in rows]
        k += 1 + n
    return out
