"""Compiled vs NumPy kernels, plus one full solve under each backend.

Usage: python benchmarks/bench_kernels.py [--repeats 20]
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from coopisac.kernels import _pykernels as py

try:
    from coopisac.kernels import _ckernels as cy
except ImportError:
    cy = None

SOLVE = (
    "from coopisac.channel import Geometry, RadioParams, generate_channels;"
    "from coopisac.metrics import RateThresholds;"
    "from coopisac.admm import solve;"
    "import time, coopisac.kernels as k;"
    "ch = generate_channels(Geometry.default(), RadioParams(grid=({g},{g})), 0);"
    "t = time.perf_counter(); _, tr = solve(ch, RateThresholds());"
    "print(k.BACKEND, (time.perf_counter() - t) / (len(tr.rows) - 1) * 1e3)"
)


def cases(rng):
    rows, length = 3 * 64, 5
    return {
        "block_threshold": (rng.uniform(0, 1, (3 * 5, 64)), 0.5),
        "power_multipliers": (rng.uniform(0, 1, (rows, length)), rng.uniform(0, 3, (rows, length)), 1.0),
        "box_halfspace_multipliers": (rng.standard_normal((3, 64 * 5)), rng.uniform(0, 1, (3, 64 * 5)),
                                      rng.uniform(0, 2, 3)),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=20)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'kernel':<26} {'numpy us':>10} {'cython us':>10} {'speedup':>8}")
    for name, inputs in cases(rng).items():
        t_py = min(timeit.repeat(lambda: getattr(py, name)(*inputs), number=50, repeat=args.repeats)) / 50
        if cy is None:
            print(f"{name:<26} {t_py * 1e6:10.1f} {'n/a':>10}")
            continue
        t_cy = min(timeit.repeat(lambda: getattr(cy, name)(*inputs), number=50, repeat=args.repeats)) / 50
        same = np.allclose(getattr(py, name)(*inputs), getattr(cy, name)(*inputs), rtol=1e-9, atol=1e-12)
        print(f"{name:<26} {t_py * 1e6:10.1f} {t_cy * 1e6:10.1f} {t_py / t_cy:7.1f}x {'' if same else 'MISMATCH'}")
    print("\nper-iteration solve time (ms), N = 64")
    for pure in ("", "1"):
        env = dict(os.environ, COOPISAC_PURE_PYTHON=pure)
        if not pure:
            env.pop("COOPISAC_PURE_PYTHON")
        res = subprocess.run([sys.executable, "-c", SOLVE.format(g=8)], env=env, capture_output=True, text=True)
        print(" ", res.stdout.strip() or res.stderr.strip().splitlines()[-1])


if __name__ == "__main__":
    main()
