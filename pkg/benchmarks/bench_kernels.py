"""Time the compiled spherical kernels against the numpy fallback.

Usage::

    python benchmarks/bench_kernels.py [--n 4096] [--dims 3,10,50] [--repeat 20]

Both backends are imported directly, so the comparison does not depend on
``DUALKG_PURE_PYTHON``. Outputs are checked for agreement before timing.
"""

import argparse
import timeit

import numpy as np

from dualkg._core import _fallback

try:
    from dualkg._core import _kernels
except ImportError:  # extension not built
    _kernels = None


def _inputs(n, d, seed=0):
    rng = np.random.default_rng(seed)
    angles = rng.uniform(0.0, 2.0 * np.pi, size=(n, d - 1))
    rot = rng.uniform(0.0, 2.0 * np.pi, size=(n, d - 1))
    points = _fallback.mpc(angles, 0.7)
    grad = rng.normal(size=(n, d))
    return angles, rot, points, grad


def _cases(mod, angles, rot, points, grad):
    return {
        "mpc": lambda: mod.mpc(angles, 0.7),
        "mcp": lambda: mod.mcp(points),
        "rotate": lambda: mod.rotate(points, rot),
        "rotate_vjp": lambda: mod.rotate_vjp(points, rot, grad),
    }


def _best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=4096, help="points per call")
    parser.add_argument("--dims", default="3,10,50")
    parser.add_argument("--repeat", type=int, default=20)
    args = parser.parse_args(argv)

    if _kernels is None:
        print("compiled extension not built; run `python setup.py build_ext --inplace`")
        return 1
    print(f"{'kernel':<11} {'d':>3} {'python ms':>10} {'cython ms':>10} {'speedup':>8}")
    for d in (int(x) for x in args.dims.split(",")):
        data = _inputs(args.n, d)
        slow, fast = _cases(_fallback, *data), _cases(_kernels, *data)
        for name in slow:
            a, b = slow[name](), fast[name]()
            ref = a if isinstance(a, tuple) else (a,)
            got = b if isinstance(b, tuple) else (b,)
            for x, y in zip(ref, got):
                np.testing.assert_allclose(y, x, rtol=1e-9, atol=1e-12)
            t_py = _best(slow[name], args.repeat) * 1e3
            t_cy = _best(fast[name], args.repeat) * 1e3
            print(f"{name:<11} {d:>3} {t_py:>10.3f} {t_cy:>10.3f} {t_py / t_cy:>7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
