"""Timing comparison of the compiled core against the numpy fallback.

Run from the repository root (after ``python3 setup.py build_ext
--inplace`` or an install that built the extension):

    python3 benchmarks/bench_backends.py

Exercises the three backend entry points on assembly-sized workloads:
pairwise resolvent blocks and profile blocks for a 160-point grid
(25600 pairs) and a 20000-node spectral sweep.  Results are checked to
agree between the backends before timing.
"""
import sys
import time

import numpy as np

try:
    from dirac4d import _core_py
except ImportError:
    sys.path.insert(0, "src")
    from dirac4d import _core_py

try:
    from dirac4d import _corex
except ImportError:
    _corex = None


def timeit(fn, *args, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    rng = np.random.default_rng(42)
    npts = 160
    pts = rng.standard_normal((npts, 4)) * 2.0
    d = (pts[:, None, :] - pts[None, :, :]).reshape(-1, 4)
    r = np.linalg.norm(d, axis=1)
    keep = r > 0
    d, r = d[keep], r[keep]
    zs = np.geomspace(1e-3, 50.0, 20000)
    disp = np.array([0.4, -0.2, 0.7, 0.1])

    cases = [
        ("dirac_blocks  (%d pairs)" % len(r), "dirac_blocks", (0.35, 1.0, 1.0, d, r)),
        ("profile_blocks(%d pairs)" % len(r), "profile_blocks", (0, 1.0, 0.0, d, r)),
        ("branch sweep  (%d nodes)" % len(zs), "branch_difference_sweep",
         (zs, 1.0, disp, float(np.linalg.norm(disp)))),
    ]

    print(f"{'case':30s} {'numpy':>10s} {'compiled':>10s} {'speedup':>8s}")
    for label, name, args in cases:
        t_py, out_py = timeit(getattr(_core_py, name), *args)
        if _corex is None:
            print(f"{label:30s} {t_py * 1e3:8.2f}ms {'absent':>10s}")
            continue
        t_cx, out_cx = timeit(getattr(_corex, name), *args)
        scale = np.max(np.abs(out_py))
        err = np.max(np.abs(out_py - out_cx)) / scale
        if err > 1e-12:
            raise SystemExit(f"backend mismatch on {name}: {err:.3e}")
        print(f"{label:30s} {t_py * 1e3:8.2f}ms {t_cx * 1e3:8.2f}ms "
              f"{t_py / t_cx:7.1f}x")
    if _corex is None:
        print("\ncompiled core not built; run python3 setup.py build_ext --inplace")


if __name__ == "__main__":
    main()
