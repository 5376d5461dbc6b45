"""Shared fixtures.

Every linear solve in the suite passes through a wrapper that checks the
discrete energy estimate: the solution's Dirichlet integral never exceeds
that of the nodal interpolant of its datum by more than 1e-10.
"""

import numpy as np
import pytest

import quasifrac.evolution as evolution
import quasifrac.laplace as laplace

ESTIMATE_SLACK = 1e-10
ESTIMATE_LOG = {"solves": 0, "worst": -np.inf}
ACCEPTANCE_LINES = {}

_original = laplace.solve_mixed_many


def _checked_solve(mesh, gs, **kw):
    gs = list(gs)
    out = _original(mesh, gs, **kw)
    for g, u in zip(gs, out):
        gi = laplace.ScalarField.interpolate(mesh, g)
        excess = laplace.dirichlet_energy(u) - laplace.dirichlet_energy(gi)
        ESTIMATE_LOG["solves"] += 1
        ESTIMATE_LOG["worst"] = max(ESTIMATE_LOG["worst"], excess)
        assert excess <= ESTIMATE_SLACK, f"energy estimate violated by {excess:.3e}"
    return out


laplace.solve_mixed_many = _checked_solve
evolution.solve_mixed_many = _checked_solve


def pytest_terminal_summary(terminalreporter):
    tr = terminalreporter
    tr.write_sep("-", "energy estimate")
    if not ESTIMATE_LOG["solves"]:
        tr.write_line("no solves in this run")
    else:
        tr.write_line(
            f"checked on {ESTIMATE_LOG['solves']} solves; largest excess over the interpolant "
            f"energy {ESTIMATE_LOG['worst']:.3e} (slack {ESTIMATE_SLACK:g})"
        )
    if ACCEPTANCE_LINES:
        tr.write_sep("-", "acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            tr.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture(scope="session")
def strip_td():
    """Strip (0,1)x(-1,1) with Dirichlet top and bottom."""
    from quasifrac.slit_mesh import DomainSpec

    return DomainSpec.rectangle((0, 1, -1, 1), ("bottom", "top"))


@pytest.fixture(scope="session")
def strip_full():
    from quasifrac.slit_mesh import DomainSpec

    return DomainSpec.rectangle((0, 1, -1, 1))
