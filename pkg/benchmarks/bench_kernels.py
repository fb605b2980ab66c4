"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from varreg import _kernels_py

try:
    from varreg import _kernels
except ImportError:
    _kernels = None


def cases(rng):
    # random feasible systems A x <= b around a planted point
    fm = []
    for n, m in ((2, 8), (3, 10), (4, 10)):
        A = rng.normal(size=(m, n))
        x0 = rng.normal(size=n)
        fm.append((f"fm_solve n={n} m={m}", "fm_solve", (A, A @ x0 + rng.uniform(0.1, 1.0, m))))
    t = np.linspace(-3, 3, 2049)
    verts = np.column_stack([t, t ** 3 - t])
    pts = rng.uniform(-3, 3, size=(1000, 2))
    poly = [("polyline_distance 1000 pts x 2048 segs", "polyline_distance", (pts, verts))]
    return fm + poly


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    backends = {"python": _kernels_py}
    if _kernels is not None:
        backends["cython"] = _kernels
    else:
        print("compiled extension not built; timing the fallback only")
    print(f"{'case':42s}" + "".join(f"{k:>12s}" for k in backends) + ("     speedup" if len(backends) > 1 else ""))
    for label, fn, fargs in cases(rng):
        times = {}
        for name, mod in backends.items():
            f = getattr(mod, fn)
            timer = timeit.Timer(lambda: f(*fargs))
            number, _ = timer.autorange()
            times[name] = min(timer.repeat(args.repeat, number)) / number
        row = f"{label:42s}" + "".join(f"{times[k] * 1e3:10.3f}ms" for k in backends)
        if len(backends) > 1:
            row += f"{times['python'] / times['cython']:11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
