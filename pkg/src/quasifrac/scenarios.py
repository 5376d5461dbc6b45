"""
Scenario configuration, the canonical examples, and the runners behind the CLI.

Scenario files are YAML.  Numbers may be written as fractions in strings
(``"1/12"``).  See ``configs/midline.yaml`` for the full schema; parsing
errors raise :class:`ConfigError` naming the offending field.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources

import numpy as np
import yaml

from .compact_sets import (
    CrackSet,
    LatticeSpec,
    UNIT_STRIP,
    component_count,
    crack_length,
    golab_report,
    midline_segment,
    oscillating_crack,
    packed_crack,
    strip_lattice,
)
from .energy import MeshParams
from .errors import ConfigError, CrackOffLattice, MeshFailure
from .evolution import (
    BoundaryProgram,
    CandidatePolicy,
    Evaluator,
    Profile,
    chain_brute_force,
    delta_convergence_study,
    energy_balance_report,
    run_discrete_evolution,
    structural_invariants,
)
from .laplace import (
    dirichlet_energy,
    export_field,
    export_gradient,
    harmonic_conjugate,
    l2_distance,
    outward_normals,
    solve_mixed,
    trace_jump,
)
from .slit_mesh import (
    CRACK,
    BoundaryInterval,
    DomainSpec,
    build_mesh,
    export_mesh,
    tip_refinement_boxes,
    validate_mesh,
)

# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def _num(value, name):
    if isinstance(value, bool):
        raise ConfigError(name, f"expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(Fraction(value.strip()))
        except (ValueError, ZeroDivisionError):
            pass
    raise ConfigError(name, f"expected a number or fraction string, got {value!r}")


def _req(d, key, name):
    if not isinstance(d, dict):
        raise ConfigError(name, "expected a mapping")
    if key not in d:
        raise ConfigError(f"{name}.{key}" if name else key, "missing")
    return d[key]


def _point(p, name):
    if not isinstance(p, (list, tuple)) or len(p) != 2:
        raise ConfigError(name, f"expected a point [x, y], got {p!r}")
    return (_num(p[0], f"{name}[0]"), _num(p[1], f"{name}[1]"))


def _crack(d, lattice, name):
    """A crack given by ``edges`` (node-index pairs) or ``segments`` (point pairs)."""
    if d is None:
        return CrackSet.empty(lattice)
    try:
        if "edges" in d:
            return CrackSet(lattice, frozenset(tuple(int(v) for v in e) for e in d["edges"]))
        segs = [
            (_point(s[0], f"{name}.segments[{k}][0]"), _point(s[1], f"{name}.segments[{k}][1]"))
            for k, s in enumerate(d.get("segments", []))
        ]
        return CrackSet.from_segments(lattice, segs)
    except CrackOffLattice as exc:
        raise ConfigError(name, str(exc)) from exc


@dataclass(frozen=True)
class Scenario:
    """Everything needed to run and diagnose one evolution."""

    name: str
    domain: DomainSpec
    lattice: LatticeSpec
    K0: CrackSet
    m: int
    program: BoundaryProgram
    mesh: MeshParams
    deltas: tuple
    policy: CandidatePolicy
    sample_times: tuple | None = None

    def evaluator(self):
        return Evaluator(self.domain, self.program.profiles, self.mesh)

    def with_overrides(self, h=None, deltas=None):
        kw = dict(self.__dict__)
        if h is not None:
            kw["mesh"] = MeshParams(h, self.mesh.refinement_boxes, self.mesh.min_angle, self.mesh.method)
        if deltas is not None:
            kw["deltas"] = tuple(float(d) for d in deltas)
            _check_deltas(kw["deltas"])
        return Scenario(**kw)


def _check_deltas(deltas):
    if not deltas:
        raise ConfigError("deltas", "need at least one time step")
    if any(d <= 0 for d in deltas):
        raise ConfigError("deltas", "time steps must be positive")
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ConfigError("deltas", "time steps must be strictly decreasing")


def parse_scenario(cfg):
    """Validate a configuration mapping and build a :class:`Scenario`."""
    if not isinstance(cfg, dict):
        raise ConfigError("<root>", "expected a mapping")
    name = str(cfg.get("name", "scenario"))

    dom = _req(cfg, "domain", "")
    raw_b = _req(dom, "bounds", "domain")
    if not isinstance(raw_b, (list, tuple)) or len(raw_b) != 4:
        raise ConfigError("domain.bounds", "expected [x0, x1, y0, y1]")
    bounds = tuple(_num(v, f"domain.bounds[{k}]") for k, v in enumerate(raw_b))
    ivs = []
    probe = DomainSpec(bounds)
    for k, iv in enumerate(dom.get("dirichlet", [])):
        nm = f"dirichlet[{k}]"
        side = _req(iv, "side", nm)
        if "interval" in iv:
            lo, hi = (_num(v, f"{nm}.interval") for v in iv["interval"])
        else:
            if side not in ("bottom", "right", "top", "left"):
                raise ConfigError(nm, f"unknown side {side!r}")
            lo, hi = probe.side_range(side)
        ivs.append(BoundaryInterval(side, lo, hi))
    domain = DomainSpec(bounds, tuple(ivs))

    lat_cfg = _req(cfg, "lattice", "")
    spacing = _num(_req(lat_cfg, "spacing", "lattice"), "lattice.spacing")
    try:
        lattice = LatticeSpec.covering(bounds, spacing)
    except ValueError as exc:
        raise ConfigError("lattice.spacing", str(exc)) from exc

    m = int(cfg.get("m", 1))
    if m < 1:
        raise ConfigError("m", "must be >= 1")
    K0 = _crack(cfg.get("K0"), lattice, "K0")
    if component_count(K0) > m:
        raise ConfigError("K0", f"has {component_count(K0)} components, more than m={m}")

    prog = _req(cfg, "program", "")
    profiles = []
    for k, p in enumerate(_req(prog, "profiles", "program")):
        kind = _req(p, "kind", f"program.profiles[{k}]")
        terms = tuple(
            (int(t[0]), int(t[1]), _num(t[2], f"program.profiles[{k}].terms"))
            for t in p.get("terms", [])
        )
        try:
            profiles.append(Profile(kind, terms, bounds if kind == "pm1" else None))
        except ConfigError as exc:
            raise ConfigError(f"program.profiles[{k}]", str(exc)) from exc
    times = tuple(_num(t, "program.times") for t in _req(prog, "times", "program"))
    weights = tuple(
        tuple(_num(w, f"program.weights[{k}]") for w in row)
        for k, row in enumerate(_req(prog, "weights", "program"))
    )
    program = BoundaryProgram(tuple(profiles), times, weights)

    mcfg = cfg.get("mesh", {}) or {}
    boxes = tuple(
        (tuple(_num(v, f"mesh.refinement_boxes[{k}]") for v in b[0]), _num(b[1], f"mesh.refinement_boxes[{k}]"))
        for k, b in enumerate(mcfg.get("refinement_boxes", []) or [])
    )
    if any(f < 1 for _, f in boxes):
        raise ConfigError("mesh.refinement_boxes", "factors must be >= 1")
    h = _num(mcfg.get("h", spacing / 2), "mesh.h")
    if h <= 0:
        raise ConfigError("mesh.h", "must be positive")
    method = mcfg.get("method", "cg")
    if method not in ("cg", "direct"):
        raise ConfigError("mesh.method", f"unknown solver {method!r}")
    mesh = MeshParams(h, boxes, _num(mcfg.get("min_angle", 2.0), "mesh.min_angle"), method)

    deltas = tuple(_num(d, "deltas") for d in _req(cfg, "deltas", ""))
    _check_deltas(deltas)

    pc = cfg.get("policy", {}) or {}
    pool = ()
    if "pool" in pc:
        pool = tuple(sorted(_crack(pc["pool"], lattice, "policy.pool").edges))
    policy = CandidatePolicy(
        mode=pc.get("mode", "tip"),
        budget=int(pc.get("budget", max(1, len(pool)))),
        m=m,
        pool=pool,
        nucleation=bool(pc.get("nucleation", True)),
    )
    st = cfg.get("sample_times")
    sample = tuple(_num(t, "sample_times") for t in st) if st else None
    return Scenario(name, domain, lattice, K0, m, program, mesh, deltas, policy, sample)


def scenario_to_dict(s):
    """Canonical mapping; ``parse_scenario(scenario_to_dict(s))`` reproduces ``s``."""
    d = {
        "name": s.name,
        "domain": {
            "bounds": list(s.domain.bounds),
            "dirichlet": [{"side": iv.side, "interval": [iv.lo, iv.hi]} for iv in s.domain.dirichlet],
        },
        "lattice": {"spacing": s.lattice.spacing},
        "m": s.m,
        "K0": {"edges": [list(e) for e in s.K0.sorted_edges()]},
        "program": {
            "profiles": [p.to_dict() for p in s.program.profiles],
            "times": list(s.program.times),
            "weights": [list(r) for r in s.program.weights],
        },
        "mesh": {
            "h": s.mesh.h,
            "refinement_boxes": [[list(b), f] for b, f in s.mesh.refinement_boxes],
            "min_angle": s.mesh.min_angle,
            "method": s.mesh.method,
        },
        "deltas": list(s.deltas),
        "policy": {
            "mode": s.policy.mode,
            "budget": s.policy.budget,
            "nucleation": s.policy.nucleation,
        },
    }
    if s.policy.pool:
        d["policy"]["pool"] = {"edges": [list(e) for e in s.policy.pool]}
    if s.sample_times:
        d["sample_times"] = list(s.sample_times)
    return d


def dump_scenario(s):
    return yaml.safe_dump(scenario_to_dict(s), sort_keys=True, default_flow_style=None)


def load_scenario(path):
    with open(path) as f:
        try:
            cfg = yaml.safe_load(f)
        except yaml.YAMLError as exc:
            raise ConfigError("<file>", f"not valid YAML: {exc}") from exc
    return parse_scenario(cfg)


def bundled_config(name):
    """Path to a configuration shipped with the package (``midline``, ``zero``)."""
    p = resources.files("quasifrac") / "configs" / f"{name}.yaml"
    if not p.is_file():
        raise ConfigError("config", f"no bundled config named {name!r}")
    return str(p)


def resolve_config(arg):
    return arg if os.path.exists(arg) else bundled_config(arg)


# ---------------------------------------------------------------------------
# Scenario runs
# ---------------------------------------------------------------------------


@dataclass
class RunSummary:
    checks: dict
    info: dict = field(default_factory=dict)

    @property
    def ok(self):
        return all(self.checks.values())


def _write_json(path, obj):
    with open(path, "w") as f:
        json.dump(obj, f, indent=1, sort_keys=True, default=_json_default)
        f.write("\n")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(type(o))


def run_scenario(scenario, out_dir):
    """Run every δ of a scenario and write traces and reports to ``out_dir``.

    Files: ``scenario.yaml``, ``trace_<k>.csv`` / ``trace_<k>.json`` per δ
    (``k`` is the index in the δ list), ``energy_balance.json``,
    ``delta_study.json`` (three or more δ), ``mesh_K0.txt``, ``field_final.csv``
    and ``gradient_final.csv`` for the finest δ, and ``summary.json``.
    Validation checks gate the return value's ``ok``; the per-step work
    errors are reported but do not gate.
    """
    if isinstance(scenario, (str, os.PathLike)):
        scenario = load_scenario(scenario)
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "scenario.yaml"), "w") as f:
        f.write(dump_scenario(scenario))
    ev = scenario.evaluator()
    checks, info = {}, {"balance": []}
    mesh0 = scenario.mesh.mesh(scenario.domain, scenario.K0)
    checks["mesh_K0_valid"] = validate_mesh(mesh0).passed
    export_mesh(mesh0, os.path.join(out_dir, "mesh_K0.txt"))

    traces = []
    for k, d in enumerate(scenario.deltas):
        try:
            tr = run_discrete_evolution(scenario.program, scenario.K0, d, scenario.policy, ev)
        except Exception as exc:
            raise type(exc)(f"delta={d}: {exc}") from exc
        traces.append(tr)
        tr.to_csv(os.path.join(out_dir, f"trace_{k}.csv"))
        tr.to_json(os.path.join(out_dir, f"trace_{k}.json"))
        inv = structural_invariants(tr)
        bal = energy_balance_report(tr)
        for key in ("irreversibility", "component_budget", "surface_monotone", "apriori_bound",
                    "one_sided_stability"):
            checks[f"delta[{k}].{key}"] = inv[key]
        checks[f"delta[{k}].chain_inequality"] = bal.chain_holds
        checks[f"delta[{k}].data_bounds"] = bal.bounds_hold
        info["balance"].append({"delta": d, **bal.to_dict()})
    _write_json(os.path.join(out_dir, "energy_balance.json"), info["balance"])
    omegas = [b["omega_hat"] for b in info["balance"]]
    info["omega_hat"] = omegas

    if len(scenario.deltas) >= 3:
        study = delta_convergence_study(
            scenario.program, scenario.K0, scenario.deltas, scenario.policy, ev,
            sample_times=scenario.sample_times, traces=traces,
        )
        _write_json(os.path.join(out_dir, "delta_study.json"), study.to_dict())
        checks["delta_study.monotone_in_t"] = all(study.monotone)
        info["jump_times"] = study.jumps

    final = traces[-1].steps[-1]
    u = ev.energy(final.K, final.a, with_field=True).field
    checks["mesh_final_valid"] = validate_mesh(u.mesh).passed
    export_field(u, os.path.join(out_dir, "field_final.csv"))
    export_gradient(u, os.path.join(out_dir, "gradient_final.csv"))
    summary = RunSummary(checks, info)
    _write_json(
        os.path.join(out_dir, "summary.json"),
        {"ok": summary.ok, "checks": checks, "omega_hat": omegas, "jump_times": info.get("jump_times", [])},
    )
    return summary


# ---------------------------------------------------------------------------
# Canonical examples
# ---------------------------------------------------------------------------

STRIP_TOP_BOTTOM = DomainSpec.rectangle(UNIT_STRIP, ("bottom", "top"))


def _x2(x, y):
    return np.asarray(y, dtype=float)


def example_oscillating(ns=(1, 4, 8, 16, 32), h=1 / 128, midline_factor=2):
    """Solutions on the strip cut by ``oscillating_crack(n)`` with ``u = ±1`` top/bottom.

    Per ``n`` the report gives the L2 distance to ``x2``, the mean
    ``|∂u/∂ν|`` on crack faces and the mean gradient in the box
    ``(0.25, 0.75) x (0.5, 0.9)``.  The lattice has spacing ``h``.
    """
    lat = strip_lattice(h)
    boxes = [((0.0, 1.0, -8 * h, 8 * h), midline_factor)] if midline_factor > 1 else None
    rows = []
    for n in ns:
        K = oscillating_crack(n, lat)
        mesh = build_mesh(STRIP_TOP_BOTTOM, K, h=h, refinement_boxes=boxes)
        u = solve_mixed(mesh, _x2)
        gr = u.gradient()
        a = mesh.areas()
        sel = mesh.boundary_tags == CRACK
        nrm, L = outward_normals(mesh, mesh.boundary_edges[sel], mesh.boundary_tri[sel])
        fl = np.abs(np.einsum("ij,ij->i", gr[mesh.boundary_tri[sel]], nrm))
        c = mesh.nodes[mesh.triangles].mean(axis=1)
        box = (c[:, 0] > 0.25) & (c[:, 0] < 0.75) & (c[:, 1] > 0.5) & (c[:, 1] < 0.9)
        g_mean = (a[box, None] * gr[box]).sum(axis=0) / a[box].sum()
        rows.append({
            "n": n,
            "l2_to_x2": l2_distance(u, _x2),
            "crack_face_flux": float((fl * L).sum() / L.sum()),
            "bulk": dirichlet_energy(u),
            "mean_gradient_box": [float(g_mean[0]), float(g_mean[1])],
            "triangles": int(len(mesh.triangles)),
            "residual": u.info["residual"],
        })
    return rows


def grating_coefficient(n):
    """Transmission coefficient of a periodic array of slits with period ``1/n``
    and gap ``exp(-n)`` (thin-grating conformal-map formula).  Independent
    reference for the fitted ``c_n``; tends to ``pi/2`` as ``n`` grows."""
    p, a = 1.0 / n, math.exp(-n)
    return math.pi / (2 * p * math.log(1.0 / math.sin(math.pi * a / (2 * p))))


def transmission_coefficient(u, K, n, band=None):
    """Fit ``c`` in ``∂u+/∂ν+ = c (u- - u+)`` from per-period averages.

    For each period ``(i/n, (i+1)/n)`` away from the side walls: the flux is
    ``-∂u/∂x2`` averaged over the band ``period x (0, band)``, and the jump
    is the face-trace difference ``u- - u+`` averaged over the period (zero
    across the gap).  Returns ``(c, fluxes, jumps)``.
    """
    mesh = u.mesh
    band = band if band is not None else 0.5 / n
    gr = u.gradient()
    a = mesh.areas()
    c = mesh.nodes[mesh.triangles].mean(axis=1)
    tj = trace_jump(u, K)
    xs = tj.positions[:, 0]
    periods = range(1, n - 1) if n > 2 else range(n)
    fl, jp = [], []
    for i in periods:
        x0, x1 = i / n, (i + 1) / n
        sel = (c[:, 0] > x0) & (c[:, 0] < x1) & (c[:, 1] > 0) & (c[:, 1] < band)
        fl.append(-float(np.sum(a[sel] * gr[sel, 1]) / a[sel].sum()))
        s = (xs >= x0 - 1e-12) & (xs <= x1 + 1e-12)
        o = np.argsort(xs[s])
        X, J = xs[s][o], tj.jump[s][o]
        jp.append(float(np.sum(0.5 * (J[1:] + J[:-1]) * np.diff(X)) / (x1 - x0)))
    fl, jp = np.array(fl), np.array(jp)
    return float(fl @ jp / (jp @ jp)), fl, jp


def example_transmission(ns=(3, 4, 5), h=1 / 30, spacing=1 / 600, min_gap_cells=2):
    """Fitted transmission coefficients for ``packed_crack(n)`` with ``g = x2``.

    The lattice spacing sets the mesh size at the midline (the gaps are
    refined through it); away from the midline the element size is ``h``.

    Raises
    ------
    MeshFailure
        If a gap spans fewer than ``min_gap_cells`` mesh cells.
    """
    lat = strip_lattice(spacing)
    fine = max(1, round(h / spacing))
    boxes = [((0.0, 1.0, -0.2, 0.2), min(4, fine)), ((0.0, 1.0, -0.05, 0.05), fine)]
    rows = []
    for n in ns:
        gap_cells = round(math.exp(-n) / spacing)
        if gap_cells < min_gap_cells:
            raise MeshFailure(
                f"n={n}: gap exp(-n)={math.exp(-n):.3g} spans {gap_cells} cells of {spacing:.3g};"
                f" need {min_gap_cells}"
            )
        K = packed_crack(n, lat)
        mesh = build_mesh(STRIP_TOP_BOTTOM, K, h=h, refinement_boxes=boxes)
        u = solve_mixed(mesh, _x2, method="direct")
        cn, fl, jp = transmission_coefficient(u, K, n)
        rows.append({
            "n": n,
            "c_n": cn,
            "rel_error": abs(cn - math.pi / 2) / (math.pi / 2),
            "grating_reference": grating_coefficient(n),
            "jumps_negative": bool(np.all(jp < 0)),
            "flux_signs_consistent": bool(np.all(fl * jp > 0)),
            "snap_error": K.snap_error,
            "triangles": int(len(mesh.triangles)),
        })
    return rows


def golab_demo(spacing_connected=1 / 64, spacing_osc=1 / 128):
    """Gołąb diagnostics for a connected growing segment and the oscillating family."""
    lat = strip_lattice(spacing_connected)
    ns = [2, 4, 8, 16, 32, 64]
    seq = [midline_segment(0.0, 1.0 - 1.0 / n, lat) for n in ns]
    full = midline_segment(0.0, 1.0, lat)
    connected = golab_report(seq, full)
    lat2 = strip_lattice(spacing_osc)
    osc_ns = [4, 8, 16, 32, 64]
    osc = golab_report([oscillating_crack(n, lat2) for n in osc_ns], midline_segment(0.0, 1.0, lat2))
    return {"connected": connected, "connected_n": ns, "oscillating": osc, "oscillating_n": osc_ns}


def oracle_compare(scenario, deltas=None):
    """Step energies of the pool policy against chained brute-force steps."""
    if scenario.policy.mode != "pool":
        raise ConfigError("policy.mode", "oracle comparison needs the pool policy")
    rows = []
    for d in deltas or scenario.deltas:
        tr = run_discrete_evolution(scenario.program, scenario.K0, d, scenario.policy, scenario.evaluator())
        ch = chain_brute_force(
            scenario.program, scenario.K0, d, scenario.policy.pool, scenario.m, scenario.evaluator()
        )
        same_e = all(s.energy.total == c[1] for s, c in zip(tr.steps, ch))
        same_k = all(s.K.edges == c[2].edges for s, c in zip(tr.steps, ch))
        rows.append({
            "delta": d,
            "steps": len(tr.steps),
            "identical_energies": same_e and len(tr.steps) == len(ch),
            "identical_cracks": same_k,
            "energies": [s.energy.total for s in tr.steps],
            "oracle_energies": [c[1] for c in ch],
        })
    return rows


def interior_slit_conjugate(hs=(1 / 16, 1 / 32), a=0.25, b=0.75, spacing=1 / 8, tip_radius=0.1):
    """Harmonic-conjugate study on the unit strip with an interior slit.

    ``∂_D Ω = ∂Ω``, ``g = x2`` and the slit ``[a, b] x {0}``; tips get the
    default nested refinement boxes.  Returns per ``h`` the standard
    deviation of ``v`` over crack nodes and the relative misfit.
    """
    dom = DomainSpec.rectangle(UNIT_STRIP)
    K = midline_segment(a, b, strip_lattice(spacing))
    boxes = tip_refinement_boxes(K, tip_radius)
    rows = []
    for h in hs:
        mesh = build_mesh(dom, K, h=h, refinement_boxes=boxes)
        u = solve_mixed(mesh, _x2, method="direct")
        c = harmonic_conjugate(u)
        rows.append({
            "h": h,
            "std_on_crack": float(np.std(c.v.values[mesh.crack_nodes])),
            "relative_misfit": c.relative_misfit,
            "triangles": int(len(mesh.triangles)),
        })
    return rows
