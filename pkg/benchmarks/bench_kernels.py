"""
Compare the numba and NumPy kernel backends.

Times each sifting kernel on its own, then a full EMD and a small EEMD,
once per backend. JIT compilation is triggered before timing starts.

    python benchmarks/bench_kernels.py --n 1000 --repeat 20
"""

import argparse
import logging
import timeit

import numpy as np

from eemd_haven import _kernels
from eemd_haven.eemd import EemdConfig, eemd
from eemd_haven.emd import emd

logger = logging.getLogger("bench_kernels")


def cases(n, ensemble):
    rng = np.random.default_rng(0)
    x = rng.normal(size=n)
    maxima, _ = _kernels.local_extrema(x)
    kx = maxima.astype(np.float64)
    ky = x[maxima]
    return {
        "local_extrema": lambda: _kernels.local_extrema(x),
        "natural_spline": lambda: _kernels.natural_spline(kx, ky, n),
        "count_sign_changes": lambda: _kernels.count_sign_changes(x),
        "emd": lambda: emd(x),
        "eemd Ne={0}".format(ensemble): lambda: eemd(x, EemdConfig(0.2, ensemble, 0)),
    }


def best_of(fn, repeat):
    fn()  # warm-up, compiles on the numba path
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.strip().splitlines()[0])
    parser.add_argument("--n", type=int, default=1000, help="series length")
    parser.add_argument("--repeat", type=int, default=20, help="timing repeats, best is kept")
    parser.add_argument("--ensemble", type=int, default=20, help="EEMD ensemble size")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    backends = ["numpy"] + (["numba"] if _kernels.HAS_NUMBA else [])
    if len(backends) == 1:
        logger.info("numba not installed; timing the NumPy path only")
    timings = {}
    previous = _kernels.backend()
    try:
        for name in backends:
            _kernels.use_backend(name)
            for label, fn in cases(args.n, args.ensemble).items():
                # the expensive cases get fewer repeats
                reps = args.repeat if label in ("local_extrema", "natural_spline",
                                                "count_sign_changes") else max(3, args.repeat // 5)
                timings[label, name] = best_of(fn, reps)
    finally:
        _kernels.use_backend(previous)

    header = "{0:<22}".format("case") + "".join("{0:>14}".format(b) for b in backends)
    if len(backends) == 2:
        header += "{0:>10}".format("speedup")
    print("N = {0}".format(args.n))
    print(header)
    for label in cases(args.n, args.ensemble):
        row = "{0:<22}".format(label)
        row += "".join("{0:>11.3f} ms".format(1e3 * timings[label, b]) for b in backends)
        if len(backends) == 2:
            row += "{0:>9.1f}x".format(timings[label, "numpy"] / timings[label, "numba"])
        print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
