"""Quasi-static brittle fracture in anti-plane shear by incremental energy minimisation."""

from .compact_sets import (
    CrackSet,
    LatticeSpec,
    component_count,
    connected_components,
    crack_length,
    dilate,
    golab_report,
    hausdorff_distance,
    oscillating_crack,
    packed_crack,
)
from .energy import MU, TOUGHNESS, EnergyBreakdown, MeshParams, energy_differential, total_energy
from .errors import (
    ConfigError,
    CrackOffLattice,
    MeshFailure,
    PoolTooLarge,
    QuasifracError,
    SegmentNotOnMesh,
    SolveFailure,
)
from .evolution import (
    BoundaryProgram,
    CandidatePolicy,
    EvolutionTrace,
    Evaluator,
    Profile,
    TimeGrid,
    brute_force_step,
    delta_convergence_study,
    energy_balance_report,
    incremental_step,
    run_discrete_evolution,
    unilateral_minimality_check,
)
from .laplace import (
    ScalarField,
    boundary_flux,
    dirichlet_energy,
    harmonic_conjugate,
    solve_mixed,
    trace_jump,
)
from .scenarios import Scenario, load_scenario, run_scenario
from .slit_mesh import DomainSpec, SlitMesh, build_mesh, validate_mesh

__version__ = "0.1.0"
