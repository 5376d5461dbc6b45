"""Acceptance criteria 1-8.

Each test prints one ``PASS``/``FAIL`` line and records it for the terminal
summary.  Criteria that do not hold are asserted anyway and left failing;
the README lists them with the reason.  Run as a script
(``python3 tests/test_acceptance.py``) to print the eight lines without pytest.
"""

import math
import sys
import time

import numpy as np

from quasifrac.evolution import (
    delta_convergence_study,
    energy_balance_report,
    omega_hat,
    run_discrete_evolution,
    structural_invariants,
)
from quasifrac.laplace import ScalarField, dirichlet_energy, l2_distance, solve_mixed
from quasifrac.scenarios import (
    bundled_config,
    example_oscillating,
    example_transmission,
    golab_demo,
    interior_slit_conjugate,
    load_scenario,
    oracle_compare,
)
from quasifrac.slit_mesh import DomainSpec, build_mesh

try:
    from conftest import ACCEPTANCE_LINES, ESTIMATE_LOG
except ImportError:  # script mode
    ACCEPTANCE_LINES, ESTIMATE_LOG = {}, None

TRACES = []
FULL = DomainSpec.rectangle((0, 1, -1, 1))


def record(num, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {num}: {detail}"
    ACCEPTANCE_LINES[num] = line
    print(line)
    return ok


def _midline():
    return load_scenario(bundled_config("midline"))


def _traces(deltas):
    sc = _midline()
    ev = sc.evaluator()
    out = {}
    for d in deltas:
        tr = run_discrete_evolution(sc.program, sc.K0, d, sc.policy, ev)
        TRACES.append(tr)
        out[d] = tr
    return sc, out


def criterion_1():
    hs = (1 / 8, 1 / 16, 1 / 32)
    excess = -math.inf
    results = {}
    for name, g in (("x2", lambda x, y: y), ("x1^2-x2^2", lambda x, y: x * x - y * y)):
        errs = []
        for h in hs:
            m = build_mesh(FULL, None, h=h)
            u = solve_mixed(m, g)
            errs.append(l2_distance(u, g))
            excess = max(excess, dirichlet_energy(u) - dirichlet_energy(ScalarField.interpolate(m, g)))
        results[name] = errs
    e = results["x1^2-x2^2"]
    orders = [math.log2(e[0] / e[1]), math.log2(e[1] / e[2])]
    # x2 lies in the P1 space, so its error is at round-off and has no order
    x2_exact = max(results["x2"]) < 1e-10
    orders_ok = all(1.7 <= p <= 2.3 for p in orders)
    est_ok = excess <= 1e-10
    if ESTIMATE_LOG is not None:
        est_ok = est_ok and ESTIMATE_LOG["worst"] <= 1e-10
        n = ESTIMATE_LOG["solves"]
    else:
        n = 6
    return record(1, orders_ok and x2_exact and est_ok,
                  f"orders {orders[0]:.3f}, {orders[1]:.3f} for x1^2-x2^2; "
                  f"x2 error {max(results['x2']):.1e}; estimate held on {n} solves so far")


def criterion_2():
    rows = example_oscillating((4, 8, 16, 32), h=1 / 128)
    d = [r["l2_to_x2"] for r in rows]
    dec = all(b < a for a, b in zip(d, d[1:]))
    ratio = d[-1] / d[0]
    return record(2, dec and ratio < 0.25,
                  f"L2 distances {', '.join(f'{x:.4f}' for x in d)}; n=32/n=4 = {ratio:.3f}")


def criterion_3():
    rows = {r["n"]: r for r in example_transmission((3, 4, 5))}
    e4, e3, e5 = rows[4]["rel_error"], rows[3]["rel_error"], rows[5]["rel_error"]
    ok = e4 <= 0.30 and e5 <= e3
    cs = ", ".join(f"c_{n}={rows[n]['c_n']:.3f} (grating {rows[n]['grating_reference']:.3f})" for n in (3, 4, 5))
    return record(3, ok, f"{cs}; |c_4-pi/2|/(pi/2) = {e4:.3f} (<= 0.30 required); err5 {e5:.3f} <= err3 {e3:.3f}")


def criterion_4():
    rep = golab_demo()
    c, o = rep["connected"], rep["oscillating"]
    ok = (c.semicontinuous and not o.semicontinuous
          and all(x == 0.5 for x in o.lengths) and o.limit_length == 1.0)
    return record(4, ok, f"connected semicontinuous={c.semicontinuous}; "
                         f"oscillating semicontinuous={o.semicontinuous}, lengths {sorted({float(x) for x in o.lengths})} vs limit {o.limit_length}")


def criterion_5():
    sc = _midline()
    rows = oracle_compare(sc, deltas=(1 / 4, 1 / 8, 1 / 16))
    ok = all(r["identical_energies"] for r in rows)
    return record(5, ok, "identical step energies for delta " + ", ".join(
        f"{r['delta']:g}:{r['identical_energies']}" for r in rows))


def criterion_6():
    deltas = (1 / 8, 1 / 16, 1 / 32)
    sc, traces = _traces(deltas)
    w = [omega_hat(traces[d]) for d in deltas]
    mono = all(b < a for a, b in zip(w, w[1:]))
    rep = energy_balance_report(traces[1 / 32])
    step_ok = rep.step_error <= 0.05
    # step 0 has zero left-endpoint work, so its ratio is |dE|/eps; report the rest too
    later = max(r["rel_err"] for r in rep.rows if r["jump_free"] and r["i"] > 0)
    flux_ok = rep.flux_error <= 0.05
    return record(6, mono and step_ok and flux_ok,
                  f"omega_hat {', '.join(f'{x:.4f}' for x in w)} (decreasing={mono}); "
                  f"max step error at T/32 {rep.step_error:.3g}, {later:.3f} without step 0 (<= 0.05 required; trapezoid work gives "
                  f"{rep.step_error_trapezoid:.1e}); flux vs gradient work {rep.flux_error:.1e}")


def criterion_7():
    if not TRACES:
        _traces((1 / 8, 1 / 16, 1 / 32))
    sc = load_scenario(bundled_config("zero"))
    ev = sc.evaluator()
    for d in sc.deltas:
        TRACES.append(run_discrete_evolution(sc.program, sc.K0, d, sc.policy, ev))
    mid = _midline()
    study = delta_convergence_study(mid.program, mid.K0, (1 / 4, 1 / 8, 1 / 16), mid.policy, mid.evaluator())
    TRACES.extend(study.traces)
    keys = ("irreversibility", "component_budget", "surface_monotone", "apriori_bound")
    inv = [structural_invariants(t) for t in TRACES]
    ok = all(r[k] for r in inv for k in keys)
    return record(7, ok, f"irreversibility, component budget, surface monotonicity and a-priori bound "
                         f"on {len(TRACES)} traces")


def criterion_8():
    rows = interior_slit_conjugate((1 / 16, 1 / 32))
    s = [r["std_on_crack"] for r in rows]
    ratio = s[0] / s[1]
    return record(8, ratio >= 2, f"std of v on crack {s[0]:.2e} -> {s[1]:.2e}, ratio {ratio:.2f} (>= 2 required)")


def test_criterion_1_solver_orders():
    assert criterion_1()


def test_criterion_2_oscillating_cracks():
    assert criterion_2()


def test_criterion_3_transmission():
    assert criterion_3()


def test_criterion_4_golab():
    assert criterion_4()


def test_criterion_5_oracle():
    assert criterion_5()


def test_criterion_6_energy_balance():
    assert criterion_6()


def test_criterion_7_invariants():
    assert criterion_7()


def test_criterion_8_conjugate():
    assert criterion_8()


if __name__ == "__main__":
    start = time.time()
    results = [f() for f in (criterion_1, criterion_2, criterion_3, criterion_4,
                              criterion_5, criterion_6, criterion_7, criterion_8)]
    print(f"{sum(results)}/8 criteria pass ({time.time() - start:.0f} s)")
    sys.exit(0 if all(results) else 1)
