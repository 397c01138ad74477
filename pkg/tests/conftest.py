"""Shared builders and the acceptance summary hook."""

from __future__ import annotations

import numpy as np
import pytest

import polyshoot as ps


def scalar_spec(n=3, k=1, sigma=0.0, p=5.0, coef=1.0) -> ps.SystemSpec:
    """One equation with a single self-power monomial."""
    return ps.SystemSpec(
        n=n,
        equations=(
            ps.EquationSpec(order=k, monomials=(ps.Monomial(coef, sigma, (p,)),)),
        ),
    )


def cross_spec(n=3, k=1, p=5.0, q=5.0, s=0.0, t=0.0, sigma1=0.0, sigma2=0.0) -> ps.SystemSpec:
    """Two equations: u^s v^q / r^sigma1 and v^t u^p / r^sigma2."""
    return ps.SystemSpec(
        n=n,
        equations=(
            ps.EquationSpec(order=k, monomials=(ps.Monomial(1.0, sigma1, (s, q)),)),
            ps.EquationSpec(order=k, monomials=(ps.Monomial(1.0, sigma2, (p, t)),)),
        ),
    )


def reduced(spec: ps.SystemSpec) -> ps.ReducedSystem:
    report = ps.validate(spec)
    assert report.ok, report.messages()
    return ps.reduce(spec)


@pytest.fixture
def controls() -> ps.IvpControls:
    return ps.IvpControls()


def navier_biharmonic(n=5, p=2.0, lo=0.05, hi=5.0, iters=60):
    """Subcritical biharmonic trajectory with both chain components vanishing
    together at the wall, found by bisecting the hit-index switch in alpha_2."""
    rs = reduced(scalar_spec(n=n, k=2, sigma=0.0, p=p))
    ctl = ps.IvpControls()

    def hit(a2):
        _, out = ps.integrate(rs, [1.0, a2], ctl)
        assert isinstance(out, ps.WallHit)
        return out.hit_index

    side_lo = hit(lo)
    assert side_lo != hit(hi)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if hit(mid) == side_lo:
            lo = mid
        else:
            hi = mid
    a2 = 0.5 * (lo + hi)
    traj, out = ps.integrate(rs, [1.0, a2], ctl)
    assert isinstance(out, ps.WallHit)
    assert np.max(out.state) < 1e-9
    return rs, traj, out


# --------------------------------------------------------------------------
# acceptance summary: one pass/fail line per criterion at the end of the run
# --------------------------------------------------------------------------

_acceptance_results: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance" in report.nodeid:
        _acceptance_results[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for nodeid in sorted(_acceptance_results):
        name = nodeid.split("::")[-1]
        outcome = _acceptance_results[nodeid]
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{name}: {verdict}")
