"""Time the numba and numpy paths of the two hot kernels on identical inputs.

    python3 benchmarks/bench_kernels.py [--slots N] [--candidates N] [--repeat R]
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from erasure_aoi import UNBOUNDED, ErasureChannel, _kernels
from erasure_aoi.optimizer import symbol_tables
from erasure_aoi.simulator import erasure_pattern, replication_rng


def best_of(fn, repeat: int) -> float:
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def bench_walk(slots: int, repeat: int) -> None:
    caps = np.array([1, 2, 4, 0, 3], dtype=np.int64)
    for eps in (0.1, 0.5, 0.8):
        erased = erasure_pattern(eps, slots, replication_rng(0, 0))
        _kernels.walk_numba(erased[:100], caps)  # compile outside the timing
        a = _kernels.walk_numba(erased, caps)
        b = _kernels.walk_numpy(erased, caps)
        same = all(np.array_equal(x, y) for x, y in zip(a[:-1], b[:-1])) and a[-1] == b[-1]
        t_nb = best_of(lambda: _kernels.walk_numba(erased, caps), repeat)
        t_np = best_of(lambda: _kernels.walk_numpy(erased, caps), repeat)
        print(f"walk  eps={eps:<4} slots={slots:>9}  numba {t_nb * 1e3:8.2f} ms  "
              f"numpy {t_np * 1e3:8.2f} ms  speedup {t_np / t_nb:6.1f}x  identical={same}")


def bench_batch(candidates: int, repeat: int) -> None:
    syms = list(range(1, 13)) + [UNBOUNDED]
    tables = symbol_tables(syms, ErasureChannel(0.3))
    idx = np.random.default_rng(0).integers(0, len(syms), size=(candidates, 5))
    _kernels.batch_moments_numba(idx[:10], *tables)
    a = _kernels.batch_moments_numba(idx, *tables)
    b = _kernels.batch_moments_numpy(idx, *tables)
    diff = float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))
    t_nb = best_of(lambda: _kernels.batch_moments_numba(idx, *tables), repeat)
    t_np = best_of(lambda: _kernels.batch_moments_numpy(idx, *tables), repeat)
    print(f"batch K=5 candidates={candidates:>9}  numba {t_nb * 1e3:8.2f} ms  "
          f"numpy {t_np * 1e3:8.2f} ms  speedup {t_np / t_nb:6.1f}x  max scaled diff {diff:.1e}")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--slots", type=int, default=10**6)
    ap.add_argument("--candidates", type=int, default=13**5)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"active backend: {_kernels.BACKEND}")
    bench_walk(args.slots, args.repeat)
    bench_batch(args.candidates, args.repeat)


if __name__ == "__main__":
    main()
