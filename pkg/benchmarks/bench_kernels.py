"""Time the numba kernels against the numpy fallbacks.

Each backend runs in its own interpreter because the choice is fixed at
import time by ``BOSONID_DISABLE_NUMBA``.

    python3 benchmarks/bench_kernels.py [--sizes 8,10,12,14] [--draws 1000000]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from bosonid import _accel

sizes, draws = json.loads(sys.argv[1]), int(sys.argv[2])
rng = np.random.default_rng(0)
out = {"numba": _accel.USE_NUMBA, "permanent": {}, "parity_mc": None}
_accel.ryser_permanent(np.eye(3, dtype=complex))  # compile outside the timer
_accel.parity_bunching_mc([np.array([0.5, 0.5])], [[0, 1]], 4, 2, 10, 0)
for n in sizes:
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    reps = max(1, int(2 ** (14 - n)))
    t = time.perf_counter()
    for _ in range(reps):
        _accel.ryser_permanent(a)
    out["permanent"][n] = (time.perf_counter() - t) / reps
m, k, n_in = 20, 13, 5
probs = [rng.dirichlet(np.ones(m + 1)) for _ in range(n_in)]
sites = [[-1] + list(range(m)) for _ in range(n_in)]
t = time.perf_counter()
_accel.parity_bunching_mc(probs, sites, m, k, draws, 1)
out["parity_mc"] = time.perf_counter() - t
print(json.dumps(out))
"""


def run(disable: bool, sizes, draws):
    env = dict(os.environ, BOSONID_DISABLE_NUMBA="1" if disable else "0")
    res = subprocess.run(
        [sys.executable, "-c", WORKER, json.dumps(sizes), str(draws)],
        env=env, capture_output=True, text=True, check=True,
    )
    return json.loads(res.stdout)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="8,10,12,14")
    parser.add_argument("--draws", type=int, default=1_000_000)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]
    fast, slow = run(False, sizes, args.draws), run(True, sizes, args.draws)
    print(f"{'kernel':<22}{'numba (s)':>14}{'numpy (s)':>14}{'speedup':>10}")
    for n in sizes:
        a, b = fast["permanent"][str(n)], slow["permanent"][str(n)]
        print(f"{'permanent n=' + str(n):<22}{a:>14.3e}{b:>14.3e}{b / a:>10.1f}")
    a, b = fast["parity_mc"], slow["parity_mc"]
    print(f"{'parity MC ' + str(args.draws):<22}{a:>14.3e}{b:>14.3e}{b / a:>10.1f}")
    if not fast["numba"]:
        print("note: numba unavailable, both columns used numpy")


if __name__ == "__main__":
    main()
