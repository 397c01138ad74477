"""Benchmark the compiled integration kernel against the pure-Python twin.

Runs representative shooting workloads through both backends and reports
wall time, accepted steps, and cross-backend agreement.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

import polyshoot as ps
import polyshoot.kernels as kernels


def workloads():
    lane_emden = ps.reduce(
        ps.SystemSpec(
            n=3,
            equations=(
                ps.EquationSpec(order=1, monomials=(ps.Monomial(1.0, 0.0, (0.0, 2.0)),)),
                ps.EquationSpec(order=1, monomials=(ps.Monomial(1.0, 0.0, (2.0, 0.0)),)),
            ),
        )
    )
    scalar_critical = ps.reduce(
        ps.SystemSpec(
            n=3,
            equations=(ps.EquationSpec(order=1, monomials=(ps.Monomial(1.0, 0.0, (5.0,)),)),),
        )
    )
    biharmonic = ps.reduce(
        ps.SystemSpec(
            n=5,
            equations=(ps.EquationSpec(order=2, monomials=(ps.Monomial(1.0, 0.0, (9.0,)),)),),
        )
    )
    c = 105 ** 0.125
    return [
        (
            "wall-hit batch (2 comps, 40 shots)",
            lane_emden,
            [np.array([0.6 + 0.02 * i, 1.9 - 0.02 * i]) for i in range(40)],
            ps.IvpControls(),
        ),
        (
            "critical decay to r~1e6 (1 shot)",
            scalar_critical,
            [np.array([3 ** 0.25])],
            ps.IvpControls(r_max=1e7),
        ),
        (
            "biharmonic chain to r=30 (5 shots)",
            biharmonic,
            [np.array([c, 5 * c])] * 5,
            ps.IvpControls(r_max=30.0),
        ),
    ]


def run_backend(core, rs, alphas, controls):
    original = kernels.integrate_core
    kernels.integrate_core = core
    try:
        t0 = time.perf_counter()
        outcomes = [ps.integrate(rs, a, controls) for a in alphas]
        elapsed = time.perf_counter() - t0
    finally:
        kernels.integrate_core = original
    return elapsed, outcomes


def describe(outcome) -> str:
    traj, out = outcome
    if isinstance(out, ps.WallHit):
        return f"WallHit r0={out.r0:.12g}"
    if isinstance(out, ps.Decayed):
        return f"Decayed |w|={np.max(out.limit):.3g}"
    return f"Truncated r={out.r_end:.6g}"


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=3, help="timing repeats (best-of)")
    args = parser.parse_args()

    backends = kernels.available_backends()
    print(f"backends available: {', '.join(backends)}")
    print(f"active default: {kernels.BACKEND_NAME}\n")

    for name, rs, alphas, controls in workloads():
        print(f"== {name}")
        times = {}
        results = {}
        for bname, core in backends.items():
            best = min(
                run_backend(core, rs, alphas, controls)[0] for _ in range(args.repeat)
            )
            times[bname] = best
            results[bname] = run_backend(core, rs, alphas, controls)[1]
            print(f"   {bname:7s} {best * 1e3:9.2f} ms")
        if "cython" in times and "python" in times:
            print(f"   speedup {times['python'] / times['cython']:7.1f}x")
            a = results["python"][0]
            b = results["cython"][0]
            print(f"   python : {describe(a)}")
            print(f"   cython : {describe(b)}")
        print()


if __name__ == "__main__":
    main()
