"""Benchmark the compiled pair-integral kernel against the numpy fallback.

Two workloads:

* raw kernel calls on a single triangle at increasing rule levels, which
  isolates the per-node loop cost, and
* full chamber integrals for the seven-line planar family at a generic
  basepoint, which is the shape of work the verification drivers produce.

Run from the repository root:

    python3 benchmarks/bench_quadcore.py [--repeats N] [--levels 5 6 7 8]
"""
from __future__ import annotations

import argparse
import time
from fractions import Fraction

import numpy as np

from pfaffsys import quadrature as quad
from pfaffsys.arrangement import bounded_chambers, instantiate_fiber
from pfaffsys.dfmodels import build_j2

HALF = {s: Fraction(1, 2) for s in ("a", "b", "c", "g")}


def _time(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def raw_kernel_rows(levels, repeats):
    corner_vals = np.array(
        [[0.4, 0.9, 0.1], [1.3, 0.2, 0.8], [0.7, 0.5, 0.6], [0.9, 1.4, 0.3]]
    )
    exps = np.array([0.5, 0.25, 0.5, 1.5])
    pairs = np.array([[0, 1], [1, 2], [0, 3], [2, 3]], dtype=np.intp)
    rows = []
    for level in levels:
        u, eu, w = quad._rule01(level)
        numpy_t = _time(
            lambda: quad._pairs_level_numpy(corner_vals, exps, pairs, u, eu, w, 1.7),
            repeats,
        )
        if quad.HAVE_COMPILED:
            import pfaffsys._quadcore as qc

            fast_t = _time(
                lambda: qc.pairs_level(corner_vals, exps, pairs, u, eu, w, 1.7),
                repeats,
            )
        else:
            fast_t = None
        rows.append((f"level {level} ({len(u)}^2 nodes)", numpy_t, fast_t))
    return rows


def chamber_rows(repeats):
    fam = build_j2()
    fiber = instantiate_fiber(fam, {"x": Fraction(3, 10), "y": Fraction(7, 10)})
    chambers = bounded_chambers(fiber)
    exps = [wp.evaluate(HALF) for wp in fam.weights]
    pairs = list(fam.basis_order)

    def run(use_compiled):
        for ch in chambers:
            quad.chamber_pair_integrals(
                ch, fiber.forms, exps, pairs, tol=1e-9, use_compiled=use_compiled
            )

    rows = [
        (
            f"{len(chambers)} chambers x {len(pairs)} pairs, tol 1e-9",
            _time(lambda: run(False), repeats),
            _time(lambda: run(True), repeats) if quad.HAVE_COMPILED else None,
        )
    ]
    return rows


def print_table(title, rows):
    print(f"\n{title}")
    print(f"{'workload':<38} {'numpy':>10} {'compiled':>10} {'speedup':>8}")
    for name, numpy_t, fast_t in rows:
        if fast_t is None:
            print(f"{name:<38} {numpy_t * 1e3:>8.2f}ms {'n/a':>10} {'n/a':>8}")
        else:
            print(
                f"{name:<38} {numpy_t * 1e3:>8.2f}ms {fast_t * 1e3:>8.2f}ms"
                f" {numpy_t / fast_t:>7.1f}x"
            )


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5, help="take the best of N runs")
    ap.add_argument(
        "--levels", type=int, nargs="+", default=[5, 6, 7, 8], help="rule levels"
    )
    args = ap.parse_args(argv)

    print(f"active kernel: {quad.kernel_name()}")
    if not quad.HAVE_COMPILED:
        print("compiled extension not built; showing numpy fallback only")

    print_table("raw kernel, single triangle", raw_kernel_rows(args.levels, args.repeats))
    print_table("seven-line family chamber integrals", chamber_rows(args.repeats))


if __name__ == "__main__":
    main()
