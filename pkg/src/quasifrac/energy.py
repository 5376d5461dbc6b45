"""Total energy ``E(g, K)`` and its differential in the boundary datum."""

from __future__ import annotations

from dataclasses import dataclass, field

from .compact_sets import crack_length
from .laplace import ScalarField, dirichlet_energy, gradient_pairing, solve_mixed
from .slit_mesh import build_mesh

# Shear modulus and toughness; the bulk term is (MU/2) * int |grad u|^2.
MU = 2.0
TOUGHNESS = 1.0


@dataclass(frozen=True)
class MeshParams:
    """How to discretise ``Ω \\ K``: element size, refinement boxes, solver."""

    h: float = 1.0 / 24
    refinement_boxes: tuple = ()
    min_angle: float = 2.0
    method: str = "cg"
    rtol: float = 1e-10

    def mesh(self, domain, K):
        return build_mesh(
            domain, K, h=self.h, refinement_boxes=list(self.refinement_boxes) or None,
            min_angle=self.min_angle,
        )

    def to_dict(self):
        return {
            "h": self.h,
            "refinement_boxes": [[list(b), f] for b, f in self.refinement_boxes],
            "min_angle": self.min_angle,
            "method": self.method,
        }


@dataclass(frozen=True)
class EnergyBreakdown:
    """Bulk, surface and total energy with the parameters that produced them."""

    bulk: float
    surface: float
    total: float
    h: float
    mu: float = MU
    toughness: float = TOUGHNESS
    field: ScalarField | None = field(default=None, compare=False, repr=False)

    @classmethod
    def from_parts(cls, dirichlet, length, h, mu=MU, toughness=TOUGHNESS, field=None):
        bulk = 0.5 * mu * dirichlet
        surface = toughness * length
        return cls(bulk, surface, bulk + surface, h, mu, toughness, field)

    def to_dict(self):
        return {"bulk": self.bulk, "surface": self.surface, "total": self.total, "h": self.h}


def total_energy(g, K, domain, params=None, mu=MU, toughness=TOUGHNESS):
    """Solve on ``Ω \\ K`` with datum ``g`` and return the energy breakdown.

    ``params`` may be a :class:`MeshParams` or a bare element size.
    """
    params = _params(params)
    mesh = params.mesh(domain, K)
    u = solve_mixed(mesh, g, method=params.method, rtol=params.rtol)
    length = crack_length(K) if K is not None else 0.0
    return EnergyBreakdown.from_parts(dirichlet_energy(u), length, params.h, mu, toughness, u)


def energy_differential(g, K, hdir, domain, params=None, mu=MU):
    """``dE(g, K) hdir = mu (∇u_g | ∇Π_h hdir)`` on the slit mesh."""
    params = _params(params)
    mesh = params.mesh(domain, K)
    u = solve_mixed(mesh, g, method=params.method, rtol=params.rtol)
    return mu * gradient_pairing(u, ScalarField.interpolate(mesh, hdir))


def _params(p):
    if p is None:
        return MeshParams()
    if isinstance(p, MeshParams):
        return p
    return MeshParams(h=float(p))
