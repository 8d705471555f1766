"""Side-by-side timing of the numba and numpy backends.

Runs every low-level primitive on workloads shaped like the real call
sites (complete sums at q up to a few hundred, phase-weighted lattice
sums with ~1e5 terms, batched modulation sweeps) and prints per-op
timings plus the speedup.  Both backends must agree to near machine
precision on every workload; the script exits nonzero if they do not.

Usage:  python benchmarks/bench_backends.py [--repeat N]
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from carleson.accel import HAS_NUMBA, implementations


def _time(fn, args, repeat: int) -> float:
    fn(*args)  # warm-up (and JIT compile on the numba path)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def _workloads(rng):
    phases = rng.uniform(-0.5, 0.5, size=200_000)
    weights = rng.standard_normal(200_000)
    cweights = weights + 1j * rng.standard_normal(200_000)
    batch = rng.uniform(-0.5, 0.5, size=(64, 20_000))
    nvals = rng.integers(1, 1 << 48, size=200_000)
    return [
        ("frac_mul (2e5 ints)", "frac_mul", (0.6180339887498949, nvals)),
        ("weyl counts q=251 n=1", "weyl_phase_counts",
         (251, 1, 1, 97, np.array([5], dtype=np.int64))),
        ("weyl counts q=64 n=2", "weyl_phase_counts",
         (64, 2, 2, 33, np.array([5, 9], dtype=np.int64))),
        ("sxy counts q=64 q'=48", "sxy_phase_counts",
         (64, 48, 33, 35, np.array([7], dtype=np.int64), 1)),
        ("phase sum (2e5, real w)", "phase_weighted_sum",
         (phases, weights)),
        ("phase sum (2e5, cplx w)", "phase_weighted_sum_cw",
         (phases, cweights)),
        ("batch sum (64 x 2e4)", "phase_weighted_sum_batch",
         (batch, weights[:20_000])),
    ]


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    impls = implementations()
    if "numba" not in impls:
        print("numba backend unavailable; nothing to compare")
        return 0

    rng = np.random.default_rng(0)
    rows = []
    mismatch = 0.0
    for label, op, opargs in _workloads(rng):
        t_np = _time(getattr(impls["numpy"], op), opargs, args.repeat)
        t_nb = _time(getattr(impls["numba"], op), opargs, args.repeat)
        a = np.asarray(getattr(impls["numpy"], op)(*opargs))
        b = np.asarray(getattr(impls["numba"], op)(*opargs))
        gap = float(np.max(np.abs(a - b))) if a.size else 0.0
        mismatch = max(mismatch, gap)
        rows.append((label, t_np, t_nb, t_np / t_nb, gap))

    print(f"{'workload':28s} {'numpy':>10s} {'numba':>10s} "
          f"{'speedup':>8s} {'max gap':>10s}")
    for label, t_np, t_nb, gain, gap in rows:
        print(f"{label:28s} {t_np * 1e3:9.3f}ms {t_nb * 1e3:9.3f}ms "
              f"{gain:7.2f}x {gap:10.2e}")
    print(f"numba available: {HAS_NUMBA}; worst agreement gap {mismatch:.2e}")
    if mismatch > 1e-9:
        print("backends disagree beyond 1e-9", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
