"""Compare the compiled and pure-Python closed-walk kernels.

    python benchmarks/bench_kernels.py [--repeat N]

Both backends must return identical histograms; the script exits non-zero
otherwise.  The compiled column is skipped when the extension is not built.
"""
import argparse
import sys
import timeit

import numpy as np

from fklab import kernels
from fklab.large_u import walk_histogram
from fklab.lattice import Configuration, build_lattice

CASES = [
    ("ring L=24, kmax=8", 1, 24, 8),
    ("ring L=48, kmax=10", 1, 48, 10),
    ("torus 6x6, kmax=6", 2, 6, 6),
    ("torus 8x8, kmax=8", 2, 8, 8),
]


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    compiled = kernels.compiled_available()
    print(f"{'case':<22}{'python [s]':>12}{'compiled [s]':>14}{'speedup':>10}")
    status = 0
    for name, d, L, kmax in CASES:
        conf = Configuration.chessboard(build_lattice(d, L))
        ref = walk_histogram(conf, kmax, backend="python")
        t_py = min(timeit.repeat(lambda: walk_histogram(conf, kmax, backend="python"), number=1, repeat=args.repeat))
        if compiled:
            got = walk_histogram(conf, kmax, backend="cython")
            if not np.array_equal(ref, got):
                print(f"{name}: backends disagree", file=sys.stderr)
                status = 1
            t_c = min(timeit.repeat(lambda: walk_histogram(conf, kmax, backend="cython"), number=1, repeat=args.repeat))
            print(f"{name:<22}{t_py:>12.4f}{t_c:>14.5f}{t_py / t_c:>9.0f}x")
        else:
            print(f"{name:<22}{t_py:>12.4f}{'n/a':>14}{'':>10}")
    return status


if __name__ == "__main__":
    sys.exit(main())
