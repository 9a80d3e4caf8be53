"""Throughput comparison of the stepping-kernel backends.

Runs identical simulations through the compiled kernel and the numpy
reference kernel and reports wall-clock times and step rates.  Both
backends consume the same Wiener increments in the same order, so the
comparison is like for like.

Usage::

    python benchmarks/bench_kernels.py [--steps N] [--paths N] [--repeat N]

The ensemble case is pinned to one worker thread so it measures the
kernels themselves; set FIBERLAY_THREADS when measuring scaling instead.
"""

from __future__ import annotations

import argparse
import time
from contextlib import contextmanager

from fiberlay import (
    SCHEME_EMBEDDED,
    SCHEME_LOCAL,
    SimConfig,
    builtin_radial_quadratic,
    run_ensemble,
    simulate,
)
from fiberlay import kernels


@contextmanager
def _forced(use_compiled: bool):
    """Temporarily pin backend selection to compiled or reference."""
    prev = kernels.USING_COMPILED
    kernels.USING_COMPILED = use_compiled
    try:
        yield
    finally:
        kernels.USING_COMPILED = prev


def _best(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def _cases(args):
    stride = max(1, args.steps // 100)

    def single(scheme, d):
        cfg = SimConfig(d=d, sigma=1.0, n_steps=args.steps, dt=1e-3, seed=1,
                        scheme=scheme, record_stride=stride)
        pot = builtin_radial_quadratic(d)
        return lambda: simulate(cfg, pot), args.steps

    def ensemble():
        cfg = SimConfig(d=2, sigma=1.0, n_steps=args.ensemble_steps, dt=1e-3,
                        seed=1, record_stride=max(1, args.ensemble_steps // 10))
        pot = builtin_radial_quadratic(2)
        run = lambda: run_ensemble(cfg, pot, args.paths, threads=1)
        return run, args.paths * args.ensemble_steps

    yield ("embedded, single path, d=2", *single(SCHEME_EMBEDDED, 2))
    yield ("local, single path, d=3", *single(SCHEME_LOCAL, 3))
    yield (f"embedded, {args.paths} paths, d=2", *ensemble())


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=200_000,
                        help="steps per single-path case (default 200000)")
    parser.add_argument("--paths", type=int, default=2048,
                        help="paths in the ensemble case (default 2048)")
    parser.add_argument("--ensemble-steps", type=int, default=2000,
                        help="steps per path in the ensemble case (default 2000)")
    parser.add_argument("--repeat", type=int, default=3,
                        help="repetitions per case; best time wins (default 3)")
    args = parser.parse_args(argv)

    if not kernels.HAVE_COMPILED:
        print("compiled kernel extension not available; nothing to compare")
        return 1

    header = f"{'case':<34}{'python':>12}{'native':>12}{'speedup':>9}{'native rate':>16}"
    print(header)
    print("-" * len(header))
    for label, fn, n_steps in _cases(args):
        with _forced(False):
            fn()  # warm up allocations and caches
            t_py = _best(fn, args.repeat)
        with _forced(True):
            fn()
            t_nat = _best(fn, args.repeat)
        rate = n_steps / t_nat
        print(f"{label:<34}{t_py:>11.3f}s{t_nat:>11.3f}s{t_py / t_nat:>8.1f}x"
              f"{rate:>14.2e}/s")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
