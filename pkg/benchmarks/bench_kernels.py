"""Compare the numba and numpy kernel backends.

Each backend runs in its own interpreter because the choice is fixed at
import time by POCRE_DISABLE_NUMBA.  Compilation is excluded: every case is
warmed up once before timing.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time, warnings
import numpy as np
from pocre import backend_name, core, ebthresh

repeat = int(sys.argv[1])
rng = np.random.default_rng(0)
z1k = np.concatenate([rng.standard_normal(950), rng.normal(0, 6, 50)])
z22k = np.concatenate([rng.standard_normal(22_000), rng.normal(0, 6, 690)])
X = rng.standard_normal((50, 22_690))
B = np.zeros((22_690, 3))
B[:12] = rng.uniform(2, 4, (12, 3))
Y = X @ B + rng.standard_normal((50, 3))
grid = np.linspace(-10, 10, 2001)

cases = {
    "shrink p=1000": lambda: ebthresh.ebayes_shrink(z1k, 0.9),
    "shrink p=22690": lambda: ebthresh.ebayes_shrink(z22k, 0.9),
    "median grid 2001": lambda: ebthresh.posterior_median(grid, 0.3),
    "fit n=50 p=22690 k=3": lambda: core.fit_xy(X, Y, 0.8, max_components=4),
}
out = {"backend": backend_name()}
warnings.simplefilter("ignore")
for name, fn in cases.items():
    fn()
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    out[name] = best
print(json.dumps(out))
"""


def run(disable, repeat):
    env = dict(os.environ, POCRE_DISABLE_NUMBA="1" if disable else "0")
    res = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    fast, slow = run(False, args.repeat), run(True, args.repeat)
    print(f"{'case':24s} {fast['backend']:>10s} {slow['backend']:>10s} {'ratio':>7s}")
    for key in fast:
        if key == "backend":
            continue
        a, b = fast[key], slow[key]
        print(f"{key:24s} {a * 1e3:8.2f}ms {b * 1e3:8.2f}ms {b / a:6.1f}x")


if __name__ == "__main__":
    main()
