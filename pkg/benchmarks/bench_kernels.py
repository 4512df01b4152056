"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 200]
"""

import argparse
import timeit

import numpy as np

from adaptmc import _pykernels

try:
    from adaptmc import _ckernels
except ImportError:
    _ckernels = None


def _cases(rng):
    d, m, k = 500, 60, 10
    idx = rng.integers(0, d, size=m).astype(np.int64)
    vals = rng.standard_normal(m)
    Q, _ = np.linalg.qr(rng.standard_normal((m, k)))
    Q = np.ascontiguousarray(Q)
    xm = rng.standard_normal(m)
    U, _ = np.linalg.qr(rng.standard_normal((d, k)))
    U = np.ascontiguousarray(U)
    x = rng.standard_normal(d)
    rows = rng.integers(0, d, size=m).astype(np.int64)
    return {
        "rescale_accumulate": lambda mod: mod.rescale_accumulate(idx, vals, d, d / m),
        "project_residual": lambda mod: mod.project_residual(Q, xm),
        "orthogonalize": lambda mod: mod.orthogonalize(U, x),
        "mark_seen": lambda mod: mod.mark_seen(np.zeros(d, dtype=np.uint8), rows),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=2000)
    args = ap.parse_args()
    cases = _cases(np.random.default_rng(0))
    print(f"{'kernel':<20}{'python us':>12}{'cython us':>12}{'speedup':>10}")
    for name, call in cases.items():
        t_py = timeit.timeit(lambda: call(_pykernels), number=args.repeat) / args.repeat
        if _ckernels is None:
            print(f"{name:<20}{t_py * 1e6:>12.2f}{'n/a':>12}{'':>10}")
            continue
        t_c = timeit.timeit(lambda: call(_ckernels), number=args.repeat) / args.repeat
        print(f"{name:<20}{t_py * 1e6:>12.2f}{t_c * 1e6:>12.2f}{t_py / t_c:>9.1f}x")


if __name__ == "__main__":
    main()
