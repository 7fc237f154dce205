"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py [--repeat 7] [--size 100000]

Prints best-of-``repeat`` wall time per call and the speedup of the
compiled backend, after checking that both return the same values.
"""
import argparse
import timeit

import numpy as np

from rcrdesign import _kernels_py

try:
    from rcrdesign import _kernels
except ImportError:
    _kernels = None


def cases(size):
    rng = np.random.default_rng(0)
    A = rng.normal(size=(3, 3))
    S = A @ A.T + np.eye(3)
    xs = np.linspace(-1.0, 1.0, size)
    ws = np.linspace(1e-5, 1 - 1e-5, size)
    di = np.diag([4.0, 0.25])
    return {
        "poly_quad_form p=3": lambda m: m.poly_quad_form(S, xs),
        "line_two_point_g": lambda m: m.line_two_point_g(0.0, 2.0, 0.0, 2.0, di, 5, ws),
    }


def best(fn, repeat):
    number = max(1, int(0.2 / max(timeit.timeit(fn, number=1), 1e-7)))
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--repeat", type=int, default=7)
    parser.add_argument("--size", type=int, default=100_000)
    args = parser.parse_args(argv)
    if _kernels is None:
        print("compiled backend not built; only the numpy fallback is available")
    print(f"{'kernel':<22}{'numpy [ms]':>12}{'cython [ms]':>13}{'speedup':>9}")
    for name, call in cases(args.size).items():
        t_py = best(lambda: call(_kernels_py), args.repeat)
        if _kernels is None:
            print(f"{name:<22}{t_py * 1e3:12.3f}{'-':>13}{'-':>9}")
            continue
        np.testing.assert_allclose(call(_kernels), call(_kernels_py), rtol=1e-12)
        t_c = best(lambda: call(_kernels), args.repeat)
        print(f"{name:<22}{t_py * 1e3:12.3f}{t_c * 1e3:13.3f}{t_py / t_c:8.1f}x")


if __name__ == "__main__":
    main()
