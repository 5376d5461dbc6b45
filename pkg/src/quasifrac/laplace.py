"""
Piecewise-linear finite elements for the mixed Laplace problem on a slit mesh.

The solution minimises the Dirichlet integral among P1 functions equal to
the nodal interpolant of ``g`` at Dirichlet nodes.  Dirichlet values are
eliminated from the system; mesh components with no Dirichlet node receive
the zero-mean solution, which is the zero function because nothing drives
them.  The remaining symmetric positive definite system is solved by
Jacobi-preconditioned conjugate gradients (or a sparse direct solve).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SegmentNotOnMesh, SolveFailure
from .slit_mesh import DIRICHLET

# Rotation by +90 degrees: R(y1, y2) = (-y2, y1).
ROTATION = np.array([[0.0, -1.0], [1.0, 0.0]])


@dataclass(frozen=True)
class ScalarField:
    """Nodal P1 values on a mesh; slit copies carry independent values."""

    mesh: object
    values: np.ndarray
    info: dict = field(default_factory=dict, compare=False)

    @classmethod
    def interpolate(cls, mesh, g):
        """Nodal interpolant of a callable ``g(x, y)``."""
        return cls(mesh, np.asarray(evaluate(g, mesh.nodes), dtype=float))

    def gradient(self):
        """Per-triangle constant gradient, shape ``(T, 2)``."""
        G = self.mesh.basis_gradients()
        return np.einsum("tk,tkd->td", self.values[self.mesh.triangles], G)

    def __add__(self, other):
        return ScalarField(self.mesh, self.values + _values(other))

    def __sub__(self, other):
        return ScalarField(self.mesh, self.values - _values(other))

    def __mul__(self, c):
        return ScalarField(self.mesh, self.values * c)

    __rmul__ = __mul__


def _values(x):
    return x.values if isinstance(x, ScalarField) else x


def evaluate(g, points):
    """Evaluate a datum at points: callables get ``(x, y)``, numbers broadcast."""
    pts = np.asarray(points, dtype=float)
    if callable(g):
        out = g(pts[..., 0], pts[..., 1])
        return np.broadcast_to(np.asarray(out, dtype=float), pts.shape[:-1]).copy()
    return np.full(pts.shape[:-1], float(g))


def stiffness_matrix(mesh):
    """Assembled P1 stiffness matrix (CSR), cached on the mesh."""
    if "stiffness" not in mesh._cache:
        G = mesh.basis_gradients()
        a = mesh.areas()
        Ke = np.einsum("t,tid,tjd->tij", a, G, G)
        t = mesh.triangles
        rows = np.repeat(t, 3, axis=1).ravel()
        cols = np.tile(t, (1, 3)).ravel()
        n = mesh.num_nodes
        mesh._cache["stiffness"] = sp.csr_matrix((Ke.ravel(), (rows, cols)), shape=(n, n))
    return mesh._cache["stiffness"]


def lumped_mass(mesh):
    m = np.zeros(mesh.num_nodes)
    np.add.at(m, mesh.triangles.ravel(), np.repeat(mesh.areas() / 3.0, 3))
    return m


def _partition(mesh):
    """Free nodes in components that touch a Dirichlet node, and floating nodes."""
    if "partition" not in mesh._cache:
        ncomp, label = mesh.components()
        anchored = np.zeros(ncomp, dtype=bool)
        anchored[label[mesh.dirichlet_nodes]] = True
        is_d = np.zeros(mesh.num_nodes, dtype=bool)
        is_d[mesh.dirichlet_nodes] = True
        used = np.zeros(mesh.num_nodes, dtype=bool)
        used[mesh.triangles.ravel()] = True
        free = np.nonzero(~is_d & anchored[label] & used)[0]
        floating = np.nonzero(~anchored[label])[0]
        mesh._cache["partition"] = (free, floating)
    return mesh._cache["partition"]


def solve_mixed(mesh, g, method="cg", rtol=1e-10, maxiter=None):
    """Discrete minimiser of the Dirichlet integral with ``u = g`` on Dirichlet nodes.

    Parameters
    ----------
    mesh : SlitMesh
    g : callable ``g(x, y)`` or number
        Dirichlet datum, defined on the whole domain.
    method : {'cg', 'direct'}
        Jacobi-preconditioned CG with relative residual ``rtol``, or SuperLU.

    Returns
    -------
    ScalarField
        ``info`` holds the solver name, iteration count and final relative
        residual.

    Raises
    ------
    SolveFailure
        If CG does not reach ``rtol`` within ``maxiter`` iterations.
    """
    return solve_mixed_many(mesh, [g], method=method, rtol=rtol, maxiter=maxiter)[0]


def solve_mixed_many(mesh, gs, method="cg", rtol=1e-10, maxiter=None):
    """:func:`solve_mixed` for several data sharing one mesh and factorisation."""
    A = stiffness_matrix(mesh)
    free, floating = _partition(mesh)
    dn = mesh.dirichlet_nodes
    Aff = A[free][:, free].tocsr()
    Afd = A[free][:, dn].tocsr()
    out = []
    solver = None
    for g in gs:
        u = np.zeros(mesh.num_nodes)
        u[dn] = evaluate(g, mesh.nodes[dn])
        info = {"method": method, "iterations": 0, "residual": 0.0}
        if len(free):
            b = -(Afd @ u[dn])
            bn = np.linalg.norm(b)
            if bn == 0.0:
                x = np.zeros(len(free))
            elif method == "direct":
                if solver is None:
                    solver = spla.factorized(Aff.tocsc())
                x = solver(b)
            else:
                x, it = _pcg(Aff, b, evaluate(g, mesh.nodes[free]), rtol, maxiter)
                info["iterations"] = it
            res = np.linalg.norm(Aff @ x - b) / bn if bn > 0 else 0.0
            info["residual"] = float(res)
            if method != "direct" and res > 10 * rtol:
                raise SolveFailure(f"CG stalled at relative residual {res:.3e}", residual=res)
            u[free] = x
        u[floating] = 0.0
        out.append(ScalarField(mesh, u, info))
    return out


def _pcg(A, b, x0, rtol, maxiter):
    d = A.diagonal()
    M = sp.diags(1.0 / d)
    count = [0]

    def cb(_):
        count[0] += 1

    maxiter = maxiter or max(1000, 20 * int(np.sqrt(A.shape[0])) * 10)
    x, info = spla.cg(A, b, x0=x0, rtol=rtol, atol=0.0, M=M, maxiter=maxiter, callback=cb)
    if info > 0:
        res = np.linalg.norm(A @ x - b) / np.linalg.norm(b)
        raise SolveFailure(f"CG did not converge in {info} iterations (residual {res:.3e})", res)
    return x, count[0]


def dirichlet_energy(u):
    """``∫ |∇u|^2`` over the cracked domain, exact for P1 fields."""
    gr = u.gradient()
    return float(np.einsum("t,td,td->", u.mesh.areas(), gr, gr))


def gradient_pairing(u, v):
    """``∫ ∇u · ∇v`` for two fields on the same mesh."""
    return float(np.einsum("t,td,td->", u.mesh.areas(), u.gradient(), v.gradient()))


def quadratic_form(mesh, a, b=None):
    """``a^T A b`` with the stiffness matrix; equals the pairing of the gradients."""
    A = stiffness_matrix(mesh)
    b = a if b is None else b
    return float(a @ (A @ b))


# 6-point degree-4 rule on the reference triangle (barycentric weights).
_Q_A, _Q_B = 0.445948490915965, 0.091576213509771
_Q_WA, _Q_WB = 0.223381589678011, 0.109951743655322
_QUAD_BARY = np.array(
    [
        [_Q_A, _Q_A, 1 - 2 * _Q_A],
        [_Q_A, 1 - 2 * _Q_A, _Q_A],
        [1 - 2 * _Q_A, _Q_A, _Q_A],
        [_Q_B, _Q_B, 1 - 2 * _Q_B],
        [_Q_B, 1 - 2 * _Q_B, _Q_B],
        [1 - 2 * _Q_B, _Q_B, _Q_B],
    ]
)
_QUAD_W = np.array([_Q_WA] * 3 + [_Q_WB] * 3)


def l2_distance(u, f):
    """``||u - f||_{L^2}`` with a degree-4 rule per triangle; ``f`` callable or field."""
    mesh = u.mesh
    p = mesh.nodes[mesh.triangles]  # (T, 3, 2)
    qp = np.einsum("qk,tkd->tqd", _QUAD_BARY, p)
    uh = np.einsum("qk,tk->tq", _QUAD_BARY, u.values[mesh.triangles])
    if isinstance(f, ScalarField):
        fv = np.einsum("qk,tk->tq", _QUAD_BARY, f.values[mesh.triangles])
    else:
        fv = evaluate(f, qp)
    err = (uh - fv) ** 2
    return float(np.sqrt(np.einsum("t,q,tq->", mesh.areas(), _QUAD_W, err)))


# ---------------------------------------------------------------------------
# Boundary and crack-face quantities
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FluxSamples:
    """Outward normal derivative on each mesh edge of a boundary segment."""

    midpoints: np.ndarray
    lengths: np.ndarray
    normals: np.ndarray
    flux: np.ndarray
    edges: np.ndarray

    def integral(self, weight=None):
        w = 1.0 if weight is None else evaluate(weight, self.midpoints)
        return float(np.sum(self.flux * self.lengths * w))


def outward_normals(mesh, edges, tris):
    p, q = mesh.nodes[edges[:, 0]], mesh.nodes[edges[:, 1]]
    d = q - p
    L = np.linalg.norm(d, axis=1)
    n = np.stack([d[:, 1], -d[:, 0]], axis=1) / L[:, None]
    c = mesh.nodes[mesh.triangles[tris]].mean(axis=1)
    flip = np.einsum("ij,ij->i", n, c - 0.5 * (p + q)) > 0
    n[flip] *= -1
    return n, L


def boundary_flux(u, segment, side=None, tol=1e-9):
    """Normal flux ``∂u/∂ν`` on the mesh edges covering a boundary or crack-face segment.

    ``segment`` is a pair of points.  On a crack, pass ``side='+'`` or
    ``side='-'`` to select the face whose triangles lie on that side of the
    crack (see :class:`~quasifrac.slit_mesh.SlitMesh` for orientation).

    Raises
    ------
    SegmentNotOnMesh
        If the boundary edges found do not cover the segment.
    """
    mesh = u.mesh
    P, Q = np.asarray(segment[0], float), np.asarray(segment[1], float)
    d = Q - P
    L = np.linalg.norm(d)
    if L == 0:
        raise SegmentNotOnMesh("degenerate segment")
    t = d / L
    nrm = np.array([-t[1], t[0]])
    scale = tol * mesh.domain.diameter
    E = mesh.boundary_edges
    a, b = mesh.nodes[E[:, 0]], mesh.nodes[E[:, 1]]
    off_a, off_b = (a - P) @ nrm, (b - P) @ nrm
    sa, sb = (a - P) @ t, (b - P) @ t
    on = (np.abs(off_a) <= scale) & (np.abs(off_b) <= scale)
    on &= (np.minimum(sa, sb) >= -scale) & (np.maximum(sa, sb) <= L + scale)
    on &= np.abs(sb - sa) > scale
    idx = np.nonzero(on)[0]
    normals, lengths = outward_normals(mesh, E[idx], mesh.boundary_tri[idx])
    if side is not None:
        # outward normal of the plus face points to the minus side, and vice versa
        ct = crack_tangent_for_segment(t)
        pn = np.array([-ct[1], ct[0]])
        want = -1.0 if side == "+" else 1.0
        keep = np.sign(normals @ pn) == want
        idx, normals, lengths = idx[keep], normals[keep], lengths[keep]
    covered = lengths.sum()
    if len(idx) == 0 or abs(covered - L) > 1e-7 * max(L, 1.0):
        raise SegmentNotOnMesh(
            f"segment {tuple(P)}-{tuple(Q)}: edges cover {covered:.6g} of {L:.6g}"
            + ("" if side is None else f" on side {side}")
        )
    gr = u.gradient()[mesh.boundary_tri[idx]]
    flux = np.einsum("ij,ij->i", gr, normals)
    mid = 0.5 * (mesh.nodes[E[idx, 0]] + mesh.nodes[E[idx, 1]])
    order = np.argsort((mid - P) @ t)
    return FluxSamples(mid[order], lengths[order], normals[order], flux[order], E[idx][order])


def crack_tangent_for_segment(t):
    if t[0] < -1e-12 or (abs(t[0]) <= 1e-12 and t[1] < 0):
        return -t
    return t


def dirichlet_flux_pairing(u, w):
    """``∫_{∂_D Ω \\ K} (∂u/∂ν) w dH^1`` from per-edge triangle gradients.

    ``w`` is a callable or number, integrated along each edge by two-point
    Gauss quadrature.
    """
    mesh = u.mesh
    sel = np.nonzero(mesh.boundary_tags == DIRICHLET)[0]
    if len(sel) == 0:
        return 0.0
    E = mesh.boundary_edges[sel]
    normals, lengths = outward_normals(mesh, E, mesh.boundary_tri[sel])
    flux = np.einsum("ij,ij->i", u.gradient()[mesh.boundary_tri[sel]], normals)
    p, q = mesh.nodes[E[:, 0]], mesh.nodes[E[:, 1]]
    g1, g2 = 0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)
    wv = 0.5 * (evaluate(w, p + g1 * (q - p)) + evaluate(w, p + g2 * (q - p)))
    return float(np.sum(flux * lengths * wv))


@dataclass(frozen=True)
class TraceJump:
    """Face values at crack nodes, ordered by grid node index."""

    grid_nodes: np.ndarray
    positions: np.ndarray
    plus: np.ndarray
    minus: np.ndarray

    @property
    def jump(self):
        """``u^- - u^+`` at each node."""
        return self.minus - self.plus


def trace_jump(u, K=None):
    """Values ``(u+, u-)`` at crack nodes; tips report their single value twice.

    Junction nodes (three or more copies) are omitted.  If ``K`` is given,
    only nodes lying on ``K`` are reported.
    """
    mesh = u.mesh
    nodes = mesh.crack_nodes
    if K is not None:
        from .compact_sets import distance_to_set

        if len(K) == 0:
            nodes = nodes[:0]
        else:
            d = distance_to_set(mesh.nodes[nodes], K.segments())
            nodes = nodes[d <= 1e-9 * mesh.domain.diameter]
    rows = []
    for p in nodes:
        copies = mesh.slit_map.get(int(p), (int(p),))
        if len(copies) == 1:
            rows.append((p, u.values[p], u.values[p]))
        elif len(copies) == 2:
            rows.append((p, u.values[copies[0]], u.values[copies[1]]))
    if not rows:
        z = np.zeros(0)
        return TraceJump(np.zeros(0, np.int64), np.zeros((0, 2)), z, z)
    g, up, um = map(np.array, zip(*rows))
    return TraceJump(g.astype(np.int64), mesh.nodes[g], up, um)


# ---------------------------------------------------------------------------
# Discrete harmonic conjugate
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConjugateResult:
    v: ScalarField
    misfit: float
    relative_misfit: float


def harmonic_conjugate(u):
    """Least-squares potential ``v`` with ``∇v ≈ R ∇u`` on the unslit mesh.

    ``v`` minimises ``||∇v - R∇u||^2`` over continuous P1 functions and has
    zero mean.  The crack must not touch the outer boundary.
    """
    mesh = u.mesh
    x0, x1, y0, y1 = mesh.domain.bounds
    if len(mesh.crack_nodes):
        pts = mesh.nodes[mesh.crack_nodes]
        tol = 1e-12 * mesh.domain.diameter
        if (
            (pts[:, 0] <= x0 + tol).any() or (pts[:, 0] >= x1 - tol).any()
            or (pts[:, 1] <= y0 + tol).any() or (pts[:, 1] >= y1 - tol).any()
        ):
            raise ValueError("harmonic_conjugate needs a crack inside the open domain")
    base = mesh.unslit()
    w = u.gradient() @ ROTATION.T  # R∇u per triangle (same triangle order)
    G = base.basis_gradients()
    a = base.areas()
    b = np.zeros(base.num_nodes)
    np.add.at(b, base.triangles.ravel(), np.einsum("t,td,tkd->tk", a, w, G).ravel())
    A = stiffness_matrix(base)
    # pure Neumann: pin node 0, then remove the mean
    keep = np.arange(1, base.num_nodes)
    v = np.zeros(base.num_nodes)
    v[keep] = spla.spsolve(A[keep][:, keep].tocsc(), b[keep])
    m = lumped_mass(base)
    v -= (m @ v) / m.sum()
    vf = ScalarField(base, v)
    r = vf.gradient() - w
    mis = float(np.einsum("t,td,td->", a, r, r))
    nu = float(np.einsum("t,td,td->", a, w, w))
    return ConjugateResult(vf, mis, mis / nu if nu > 0 else 0.0)


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------


def export_field(u, path):
    """CSV with columns ``node, x, y, side, value``."""
    side = u.mesh.copy_side()
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["node", "x", "y", "side", "value"])
        for k, ((x, y), s, val) in enumerate(zip(u.mesh.nodes, side, u.values)):
            w.writerow([k, repr(float(x)), repr(float(y)), s, repr(float(val))])


def export_gradient(u, path):
    """CSV with columns ``triangle, cx, cy, gx, gy``."""
    c = u.mesh.nodes[u.mesh.triangles].mean(axis=1)
    g = u.gradient()
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["triangle", "cx", "cy", "gx", "gy"])
        for k in range(len(g)):
            w.writerow([k, repr(float(c[k, 0])), repr(float(c[k, 1])), repr(float(g[k, 0])), repr(float(g[k, 1]))])
