"""
Discrete-time quasi-static crack growth by incremental energy minimisation.

The boundary datum is a finite combination ``g(t) = sum_k a_k(t) G_k`` with
piecewise-linear weights.  Solutions depend linearly on the datum, so for
each candidate crack we solve once per profile and cache

* ``D[k, l] = (∇u_k | ∇u_l)``, giving the bulk energy ``(mu/2) a^T D a``;
* ``C[k, l] = (∇u_k | ∇Π_h G_l)``, giving the work pairing;
* ``F[k, l]``, the same pairing computed from the normal flux on ``∂_D Ω``;
* ``P[k, l] = (∇Π_h G_k | ∇Π_h G_l)``, giving the interpolant energy.

Every time step then costs a few small matrix products per candidate.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .compact_sets import (
    CrackSet,
    component_count,
    crack_length,
    hausdorff_distance,
)
from .energy import MU, TOUGHNESS, EnergyBreakdown, MeshParams
from .errors import ConfigError, CrackOffLattice, PoolTooLarge, QuasifracError
from .laplace import (
    ScalarField,
    dirichlet_flux_pairing,
    gradient_pairing,
    solve_mixed_many,
)

log = logging.getLogger(__name__)

# relative tolerance under which two energies count as tied
TIE_RTOL = 1e-12
BRUTE_FORCE_LIMIT = 20


# ---------------------------------------------------------------------------
# Boundary programs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Profile:
    """A named spatial profile ``G(x1, x2)`` from a small library.

    ``kind`` is one of ``x1``, ``x2``, ``pm1`` (affine in ``x2``, equal to
    -1 on the bottom side and +1 on the top side of ``bounds``) or ``poly``
    (``terms`` is a tuple of ``(i, j, c)`` meaning ``c x1^i x2^j``).
    """

    kind: str
    terms: tuple = ()
    bounds: tuple | None = None

    KINDS = ("x1", "x2", "pm1", "poly")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigError("profile", f"unknown kind {self.kind!r}; choose from {self.KINDS}")
        if self.kind == "pm1" and self.bounds is None:
            raise ConfigError("profile", "pm1 needs the domain bounds")

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind == "x1":
            return x.copy()
        if self.kind == "x2":
            return y.copy()
        if self.kind == "pm1":
            _, _, y0, y1 = self.bounds
            return (2.0 * y - y0 - y1) / (y1 - y0)
        out = np.zeros(np.broadcast(x, y).shape)
        for i, j, c in self.terms:
            out = out + c * x**i * y**j
        return out

    def to_dict(self):
        d = {"kind": self.kind}
        if self.kind == "poly":
            d["terms"] = [list(t) for t in self.terms]
        return d


@dataclass(frozen=True)
class BoundaryProgram:
    """``g(t) = sum_k a_k(t) G_k`` with weights linear between knot times."""

    profiles: tuple
    times: tuple
    weights: tuple  # one tuple of knot values per profile

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if len(t) < 2 or t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise ConfigError("program.times", "need increasing knot times starting at 0")
        if w.shape != (len(self.profiles), len(t)):
            raise ConfigError(
                "program.weights", f"expected shape {(len(self.profiles), len(t))}, got {w.shape}"
            )
        if np.any(w[:, 0] != 0.0):
            raise ConfigError("program.weights", "g(0) must vanish: all weights at t=0 are 0")

    @classmethod
    def linear_ramp(cls, profile, T=1.0, rate=1.0):
        """``g(t) = rate * t * G``."""
        return cls((profile,), (0.0, float(T)), ((0.0, rate * float(T)),))

    @classmethod
    def zero(cls, profile, T=1.0):
        return cls((profile,), (0.0, float(T)), ((0.0, 0.0),))

    @property
    def T(self):
        return float(self.times[-1])

    @property
    def size(self):
        return len(self.profiles)

    def coefficients(self, t):
        """Weights ``a(t)``, an array of length :attr:`size`."""
        w = np.asarray(self.weights, dtype=float)
        return np.array([np.interp(t, self.times, row) for row in w])

    def datum(self, t):
        a = self.coefficients(t)
        profs = self.profiles

        def g(x, y):
            return sum(ak * G(x, y) for ak, G in zip(a, profs))

        return g

    def knot_times(self):
        return np.asarray(self.times, dtype=float)

    def rates(self):
        """Piecewise-constant ``a'(t)`` per knot interval, shape ``(size, knots-1)``."""
        w = np.asarray(self.weights, dtype=float)
        return np.diff(w, axis=1) / np.diff(self.knot_times())

    def to_dict(self):
        return {
            "profiles": [p.to_dict() for p in self.profiles],
            "times": list(self.times),
            "weights": [list(r) for r in self.weights],
        }


@dataclass(frozen=True)
class TimeGrid:
    """Nodes ``t_i = i * delta`` on ``[0, T]``; a short last step ends at ``T``."""

    delta: float
    T: float

    def __post_init__(self):
        if not self.delta > 0:
            raise ConfigError("delta", "time step must be positive")

    @property
    def times(self):
        n = math.ceil(self.T / self.delta - 1e-9)
        t = self.delta * np.arange(n + 1)
        t[-1] = min(t[-1], self.T)
        return t


# ---------------------------------------------------------------------------
# Candidate policies
# ---------------------------------------------------------------------------

DIRECTIONS = ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1))


@dataclass(frozen=True)
class CandidatePolicy:
    """Which cracks ``K ⊇ K_prev`` an incremental step may choose from.

    ``mode='pool'`` enumerates unions with every subset of ``pool`` of at
    most ``budget`` edges.  ``mode='tip'`` grows straight rays of 1 to
    ``budget`` edges from each tip in the eight lattice directions, adds
    simultaneous straight extensions of all tips, and allows single-edge
    nucleation anywhere while the component count is below ``m``.
    """

    mode: str = "tip"
    budget: int = 1
    m: int = 1
    pool: tuple = ()
    nucleation: bool = True

    def __post_init__(self):
        if self.mode not in ("tip", "pool"):
            raise ConfigError("policy.mode", f"unknown mode {self.mode!r}")
        if self.budget < 0:
            raise ConfigError("policy.budget", "must be >= 0")
        if self.m < 1:
            raise ConfigError("policy.m", "must be >= 1")

    def candidates(self, K_prev):
        """Admissible candidates, ``K_prev`` first; duplicates removed."""
        seen = {K_prev.edges}
        out = [K_prev]

        def add(edges):
            edges = frozenset(edges)
            if edges in seen:
                return
            seen.add(edges)
            try:
                K = K_prev.with_edges(edges - K_prev.edges)
            except CrackOffLattice:
                return
            if component_count(K) <= self.m:
                out.append(K)

        if self.mode == "pool":
            free = sorted(set(_norm_edges(self.pool)) - K_prev.edges)
            for r in range(1, min(self.budget, len(free)) + 1):
                for S in itertools.combinations(free, r):
                    add(K_prev.edges | set(S))
            return out

        lat = K_prev.lattice
        tips = K_prev.tips()
        for p in tips:
            for d in DIRECTIONS:
                ray = _ray(lat, p, d, self.budget, K_prev.edges)
                for L in range(1, len(ray) + 1):
                    add(K_prev.edges | set(ray[:L]))
        if len(tips) > 1:
            dirs = {p: _tip_direction(K_prev, p) for p in tips}
            rays = {p: _ray(lat, p, dirs[p], self.budget, K_prev.edges) for p in tips}
            for L in range(1, self.budget + 1):
                if all(len(r) >= L for r in rays.values()):
                    add(K_prev.edges.union(*(set(r[:L]) for r in rays.values())))
        if self.nucleation and component_count(K_prev) < self.m:
            for e in _all_lattice_edges(lat):
                if e not in K_prev.edges:
                    add(K_prev.edges | {e})
        return out

    def to_dict(self):
        d = {"mode": self.mode, "budget": self.budget, "m": self.m, "nucleation": self.nucleation}
        if self.pool:
            d["pool"] = [list(e) for e in _norm_edges(self.pool)]
        return d


def _norm_edges(edges):
    return sorted({(min(a, b), max(a, b)) for a, b in edges})


def _ray(lat, p, d, length, existing):
    i, j = lat.ij(p)
    edges = []
    for s in range(length):
        a = (i + s * d[0], j + s * d[1])
        b = (i + (s + 1) * d[0], j + (s + 1) * d[1])
        if not lat.contains_ij(*b):
            break
        e = tuple(sorted((lat.index(*a), lat.index(*b))))
        if e in existing:
            break
        edges.append(e)
    return edges


def _tip_direction(K, p):
    """Lattice direction continuing the crack beyond tip ``p``."""
    lat = K.lattice
    q = next(b if a == p else a for a, b in K.edges if p in (a, b))
    (ip, jp), (iq, jq) = lat.ij(p), lat.ij(q)
    return (ip - iq, jp - jq)


def _all_lattice_edges(lat):
    out = []
    for j in range(lat.ny + 1):
        for i in range(lat.nx + 1):
            a = lat.index(i, j)
            for di, dj in ((1, 0), (0, 1), (1, 1), (-1, 1)):
                if lat.contains_ij(i + di, j + dj):
                    b = lat.index(i + di, j + dj)
                    out.append((min(a, b), max(a, b)))
    return sorted(out)


# ---------------------------------------------------------------------------
# Cached responses
# ---------------------------------------------------------------------------


@dataclass
class Response:
    """Per-crack linear response to each profile."""

    length: float
    components: int
    D: np.ndarray
    C: np.ndarray
    F: np.ndarray
    P: np.ndarray
    fields: list
    solver: dict


class Evaluator:
    """Energies of cracks under combinations of fixed profiles, cached by edge set."""

    def __init__(self, domain, profiles, params=None, mu=MU, toughness=TOUGHNESS):
        self.domain = domain
        self.profiles = tuple(profiles)
        self.params = params if isinstance(params, MeshParams) else MeshParams(
            h=float(params) if params is not None else MeshParams().h
        )
        self.mu = mu
        self.toughness = toughness
        self._cache = {}
        self.solves = 0

    def response(self, K):
        key = K.edges
        r = self._cache.get(key)
        if r is None:
            r = self._compute(K)
            self._cache[key] = r
        return r

    def _compute(self, K):
        mesh = self.params.mesh(self.domain, K)
        us = solve_mixed_many(mesh, self.profiles, method=self.params.method, rtol=self.params.rtol)
        self.solves += len(us)
        Pi = [ScalarField.interpolate(mesh, G) for G in self.profiles]
        n = len(us)
        D, C, F, P = (np.zeros((n, n)) for _ in range(4))
        for k in range(n):
            for l in range(n):
                D[k, l] = gradient_pairing(us[k], us[l])
                C[k, l] = gradient_pairing(us[k], Pi[l])
                F[k, l] = dirichlet_flux_pairing(us[k], self.profiles[l])
                P[k, l] = gradient_pairing(Pi[k], Pi[l])
        info = {
            "triangles": int(len(mesh.triangles)),
            "max_residual": max(u.info.get("residual", 0.0) for u in us),
        }
        return Response(crack_length(K), component_count(K), D, C, F, P, us, info)

    def energy(self, K, a, with_field=False):
        r = self.response(K)
        a = np.asarray(a, dtype=float)
        dirichlet = float(a @ r.D @ a)
        fld = None
        if with_field:
            fld = ScalarField(r.fields[0].mesh, sum(ak * u.values for ak, u in zip(a, r.fields)))
        return EnergyBreakdown.from_parts(
            dirichlet, r.length, self.params.h, self.mu, self.toughness, fld
        )

    def dirichlet(self, K, a):
        a = np.asarray(a, dtype=float)
        return float(a @ self.response(K).D @ a)

    def work(self, K, a, b, matrix="C"):
        """``mu * a^T M (b - a)``: work of the field for weights ``a`` over the increment to ``b``."""
        M = getattr(self.response(K), matrix)
        a = np.asarray(a, dtype=float)
        return float(self.mu * a @ M @ (np.asarray(b, dtype=float) - a))

    def interpolant_dirichlet(self, K, a):
        a = np.asarray(a, dtype=float)
        return float(a @ self.response(K).P @ a)


def _choose(scored):
    """Minimiser with the documented tie-breaking.

    ``scored`` holds ``(total, surface, sorted_edges, K)``; energies within
    ``TIE_RTOL`` of the minimum tie, then smaller surface wins, then the
    lexicographically smallest edge list.
    """
    best = min(s[0] for s in scored)
    tol = TIE_RTOL * max(1.0, abs(best))
    tied = [s for s in scored if s[0] <= best + tol]
    return min(tied, key=lambda s: (round(s[1], 12), s[2]))


# ---------------------------------------------------------------------------
# Steps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StepResult:
    K: CrackSet
    energy: EnergyBreakdown
    candidates: int
    skipped: int


def incremental_step(K_prev, a, policy, evaluator):
    """Minimise ``E(g, K)`` over the policy's candidates ``K ⊇ K_prev``.

    ``a`` holds the profile weights of ``g``.  Candidates whose mesh or solve
    fails are skipped and logged.
    """
    scored, skipped = [], 0
    for K in policy.candidates(K_prev):
        try:
            e = evaluator.energy(K, a)
        except QuasifracError as exc:
            if K.edges == K_prev.edges:
                raise
            log.warning("candidate skipped (%d edges): %s", len(K), exc)
            skipped += 1
            continue
        scored.append((e.total, e.surface, K.sorted_edges(), K))
    total, _, _, K = _choose(scored)
    return StepResult(K, evaluator.energy(K, a), len(scored), skipped)


def brute_force_step(K_prev, a, pool, m, evaluator):
    """Exact minimiser over ``K_prev ∪ S`` for every subset ``S`` of ``pool``.

    Raises
    ------
    PoolTooLarge
        If ``pool`` has more than 20 edges.
    """
    pool = _norm_edges(pool)
    if len(pool) > BRUTE_FORCE_LIMIT:
        raise PoolTooLarge(f"pool of {len(pool)} edges exceeds {BRUTE_FORCE_LIMIT}")
    scored, seen = [], set()
    for mask in range(1 << len(pool)):
        edges = K_prev.edges | {pool[b] for b in range(len(pool)) if mask >> b & 1}
        if edges in seen:
            continue
        seen.add(edges)
        try:
            K = K_prev.with_edges(edges - K_prev.edges)
        except CrackOffLattice:
            continue
        if component_count(K) > m:
            continue
        try:
            e = evaluator.energy(K, a)
        except QuasifracError as exc:
            if not mask:
                raise
            log.warning("oracle candidate skipped: %s", exc)
            continue
        scored.append((e.total, e.surface, K.sorted_edges(), K))
    return _choose(scored)[3]


# ---------------------------------------------------------------------------
# Traces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StepRecord:
    """One row of a trace.

    ``work`` is the left-endpoint work over ``[t_i, t_{i+1}]``,
    ``work_trapezoid`` uses the crack ``K_i`` at both ends and ``work_flux``
    evaluates the left-endpoint work from the normal flux on ``∂_D Ω``.
    The last row carries zero work.
    """

    index: int
    t: float
    K: CrackSet
    a: tuple
    energy: EnergyBreakdown
    dirichlet: float
    work: float
    work_trapezoid: float
    work_flux: float
    interpolant_max: float
    candidates: int
    skipped: int

    @property
    def components(self):
        return component_count(self.K)

    @property
    def length(self):
        return crack_length(self.K)


CSV_COLUMNS = ("t", "bulk", "surface", "total", "work_cumulative", "components", "crack_length")


@dataclass
class EvolutionTrace:
    delta: float
    program: BoundaryProgram
    policy: CandidatePolicy
    steps: list
    evaluator: Evaluator = field(repr=False, compare=False, default=None)

    @property
    def times(self):
        return np.array([s.t for s in self.steps])

    @property
    def totals(self):
        return np.array([s.energy.total for s in self.steps])

    def cumulative_work(self):
        w = np.array([s.work for s in self.steps])
        return np.concatenate([[0.0], np.cumsum(w[:-1])])

    def crack_at(self, t):
        """``K_δ(t)``: the crack of the last node ``t_i <= t``."""
        k = int(np.searchsorted(self.times, t + 1e-12, side="right")) - 1
        return self.steps[max(k, 0)].K

    def jump_free(self, i):
        """True if step ``i -> i+1`` keeps the crack."""
        return self.steps[i + 1].K.edges == self.steps[i].K.edges

    def to_csv(self, path=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for s, W in zip(self.steps, self.cumulative_work()):
            e = s.energy
            w.writerow([repr(s.t), repr(e.bulk), repr(e.surface), repr(e.total), repr(float(W)),
                        s.components, repr(s.length)])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as f:
                f.write(text)
        return text

    def to_json(self, path=None):
        data = {
            "delta": self.delta,
            "program": self.program.to_dict(),
            "policy": self.policy.to_dict(),
            "steps": [
                {
                    "index": s.index,
                    "t": s.t,
                    "weights": list(s.a),
                    "energy": s.energy.to_dict(),
                    "work": s.work,
                    "crack": s.K.to_dict(),
                }
                for s in self.steps
            ],
        }
        text = json.dumps(data, sort_keys=True, indent=1)
        if path is not None:
            with open(path, "w") as f:
                f.write(text)
        return text


def run_discrete_evolution(program, K0, delta, policy, evaluator):
    """Incremental minimisation on ``t_i = i * delta`` starting from ``K_0 = K0``.

    ``evaluator`` must have been built on ``program.profiles``.
    """
    if component_count(K0) > policy.m:
        raise ConfigError("K0", f"has {component_count(K0)} components, more than m={policy.m}")
    times = TimeGrid(delta, program.T).times
    coeffs = [program.coefficients(t) for t in times]
    imax = _interpolant_max(program, evaluator, K0)
    Ks, results = [K0], [StepResult(K0, evaluator.energy(K0, coeffs[0]), 1, 0)]
    for i in range(1, len(times)):
        res = incremental_step(Ks[-1], coeffs[i], policy, evaluator)
        Ks.append(res.K)
        results.append(res)
    steps = []
    for i, (t, K, res) in enumerate(zip(times, Ks, results)):
        a = coeffs[i]
        if i + 1 < len(times):
            b = coeffs[i + 1]
            W = evaluator.work(K, a, b)
            Wf = evaluator.work(K, a, b, "F")
            r = evaluator.response(K)
            Wt = 0.5 * evaluator.mu * float((a @ r.C + b @ r.C) @ (b - a))
        else:
            W = Wf = Wt = 0.0
        steps.append(
            StepRecord(
                i, float(t), K, tuple(float(x) for x in a), res.energy,
                evaluator.dirichlet(K, a), W, Wt, Wf, _interpolant_max(program, evaluator, K),
                res.candidates, res.skipped,
            )
        )
    return EvolutionTrace(float(delta), program, policy, steps, evaluator)


def _interpolant_max(program, evaluator, K):
    """``max_t ||∇Π_h g(t)||^2`` on the mesh of ``K``; attained at a knot."""
    return max(evaluator.interpolant_dirichlet(K, program.coefficients(t)) for t in program.times)


def chain_brute_force(program, K0, delta, pool, m, evaluator):
    """Evolution obtained by chaining :func:`brute_force_step`; returns per-step totals and cracks."""
    times = TimeGrid(delta, program.T).times
    K = K0
    out = [(float(times[0]), evaluator.energy(K0, program.coefficients(0.0)).total, K0)]
    for t in times[1:]:
        a = program.coefficients(t)
        K = brute_force_step(K, a, pool, m, evaluator)
        out.append((float(t), evaluator.energy(K, a).total, K))
    return out


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------


def structural_invariants(trace):
    """Exact checks: irreversibility, component budget, surface monotonicity, a-priori bound."""
    steps = trace.steps
    irreversible = all(steps[i - 1].K.edges <= steps[i].K.edges for i in range(1, len(steps)))
    budget = all(s.components <= trace.policy.m for s in steps)
    surface = all(steps[i - 1].length <= steps[i].length for i in range(1, len(steps)))
    bound = max(s.interpolant_max for s in steps)
    apriori = all(s.dirichlet <= bound * (1 + 1e-10) + 1e-12 for s in steps)
    one_sided = all(
        steps[i].energy.total
        <= trace.evaluator.energy(steps[i - 1].K, steps[i].a).total
        + TIE_RTOL * max(1.0, abs(steps[i].energy.total))
        for i in range(1, len(steps))
    )
    return {
        "irreversibility": irreversible,
        "component_budget": budget,
        "surface_monotone": surface,
        "apriori_bound": apriori,
        "one_sided_stability": one_sided,
        "max_dirichlet": max(s.dirichlet for s in steps),
        "interpolant_bound": bound,
    }


def omega_hat(trace):
    """Smallest ``ω`` with ``E_j <= E_i + sum_{i<=r<j} W_r + ω`` for all ``i < j``."""
    E = trace.totals
    S = E - trace.cumulative_work()
    best, run_min = 0.0, S[0]
    for j in range(1, len(S)):
        best = max(best, S[j] - run_min)
        run_min = min(run_min, S[j])
    return float(best)


@dataclass
class BalanceReport:
    omega_hat: float
    chain_holds: bool
    lambda_gradient: float
    lambda_surface: float
    bounds_hold: bool
    step_error: float
    step_error_trapezoid: float
    flux_error: float
    jump_free_steps: list
    rows: list

    def to_dict(self):
        d = dict(self.__dict__)
        d["rows"] = self.rows
        return d


def energy_balance_report(trace, program=None, eps=1e-12):
    """Discrete energy-balance diagnostics.

    (i) chain inequality with fitted slack ``omega_hat``; (ii) data bounds on
    ``||∇u_i||`` and ``H^1(K_i)``; (iii) per-step ``ΔE`` against the work
    ``W_i`` on jump-free steps, as ``max |ΔE - W_i| / max(W_i, eps)``; (iv)
    the boundary-flux work against ``W_i`` on the same steps.
    """
    program = program or trace.program
    ev = trace.evaluator
    steps = trace.steps
    w = omega_hat(trace)
    E = trace.totals
    cw = trace.cumulative_work()
    chain = all(
        E[j] <= E[i] + (cw[j] - cw[i]) + w + 1e-12 * max(1.0, abs(E[j]))
        for j in range(len(E)) for i in range(j)
    )

    # (ii) sup_t ||∇Π g|| and the energy-inequality bound on the length
    lam_g = math.sqrt(max(s.interpolant_max for s in steps))
    rates = program.rates()
    dt = np.diff(program.knot_times())
    K0 = steps[0].K
    gdot = sum(
        math.sqrt(max(ev.interpolant_dirichlet(K0, rates[:, k]), 0.0)) * dt[k] for k in range(len(dt))
    )
    lam_s = steps[0].energy.total + ev.mu * lam_g * gdot + w
    bounds = all(
        math.sqrt(s.dirichlet) <= lam_g * (1 + 1e-10) and s.length <= lam_s + 1e-12 for s in steps
    )

    rows, free = [], []
    err = err_t = err_f = 0.0
    for i in range(len(steps) - 1):
        s = steps[i]
        dE = steps[i + 1].energy.total - s.energy.total
        jf = trace.jump_free(i)
        e1 = abs(dE - s.work) / max(abs(s.work), eps)
        e2 = abs(dE - s.work_trapezoid) / max(abs(s.work_trapezoid), eps)
        e3 = abs(s.work_flux - s.work) / max(abs(s.work), eps)
        if abs(s.work) <= eps and abs(s.work_flux) <= eps:
            e3 = 0.0
        if abs(dE) <= eps and abs(s.work) <= eps:
            e1 = 0.0
        if abs(dE) <= eps and abs(s.work_trapezoid) <= eps:
            e2 = 0.0
        rows.append({
            "i": i, "t": s.t, "dE": dE, "work": s.work, "work_trapezoid": s.work_trapezoid,
            "work_flux": s.work_flux, "jump_free": jf, "rel_err": e1, "rel_err_trapezoid": e2,
            "rel_err_flux": e3,
        })
        if jf:
            free.append(i)
            err, err_t, err_f = max(err, e1), max(err_t, e2), max(err_f, e3)
    return BalanceReport(w, chain, lam_g, lam_s, bounds, err, err_t, err_f, free, rows)


def unilateral_minimality_check(trace, probes, tol=1e-10):
    """Check ``E(g(t_i), K_i) <= E(g(t_i), K)`` for probes ``(i, K)`` with ``K ⊇ K_i``.

    Returns a list of dicts; ``ok`` is False for a violation, which means the
    candidate policy missed a better competitor.
    """
    ev = trace.evaluator
    out = []
    for i, K in probes:
        s = trace.steps[i]
        if not s.K.edges <= K.edges:
            raise ValueError(f"probe at step {i} does not contain the trace crack")
        if component_count(K) > trace.policy.m:
            raise ValueError(f"probe at step {i} exceeds the component budget")
        e_probe = ev.energy(K, s.a).total
        out.append({
            "step": i, "t": s.t, "trace_energy": s.energy.total, "probe_energy": e_probe,
            "ok": s.energy.total <= e_probe + tol * max(1.0, abs(e_probe)),
        })
    return out


@dataclass
class DeltaStudy:
    deltas: list
    sample_times: list
    distances: list  # per sample time, a len(deltas) x len(deltas) matrix
    cauchy: list
    monotone: list
    jumps: list
    threshold: float
    traces: list = field(repr=False, default_factory=list)

    def to_dict(self):
        return {
            "deltas": self.deltas,
            "sample_times": self.sample_times,
            "distances": [np.asarray(d).tolist() for d in self.distances],
            "cauchy": self.cauchy,
            "monotone_in_t": self.monotone,
            "jump_times": self.jumps,
            "threshold": self.threshold,
        }


def delta_convergence_study(program, K0, deltas, policy, evaluator, sample_times=None, traces=None):
    """Cross-δ Hausdorff distances of ``K_δ(t)`` at sample times.

    A sample time is flagged as a jump when the distance between the two
    finest runs exceeds three lattice spacings.  ``cauchy[t]`` records
    whether distances to the finest run shrink as δ decreases.
    """
    deltas = list(deltas)
    if len(deltas) < 3 or any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ValueError("need at least three decreasing time steps")
    if traces is None:
        traces = [run_discrete_evolution(program, K0, d, policy, evaluator) for d in deltas]
    if sample_times is None:
        sample_times = list(TimeGrid(deltas[-1], program.T).times)
    diam = evaluator.domain.diameter
    thr = 3.0 * K0.lattice.spacing
    dists, cauchy, jumps = [], [], []
    for t in sample_times:
        Ks = [tr.crack_at(t) for tr in traces]
        M = np.array([[hausdorff_distance(A, B, diam=diam) for B in Ks] for A in Ks])
        dists.append(M)
        to_finest = M[:-1, -1]
        cauchy.append(bool(np.all(np.diff(to_finest) <= 1e-12)))
        if M[-2, -1] > thr:
            jumps.append(float(t))
    monotone = [
        all(tr.steps[i - 1].K.edges <= tr.steps[i].K.edges for i in range(1, len(tr.steps)))
        for tr in traces
    ]
    return DeltaStudy(deltas, [float(t) for t in sample_times], dists, cauchy, monotone, jumps, thr, traces)
