"""Compare the numba kernels with the pure-numpy fallback.

Each backend runs in its own interpreter because the choice is made at
import time from ``STRUCTDIV_NO_NUMBA``.

    python3 benchmarks/bench_kernels.py --sizes 50 100 200 --repeats 3
"""
import argparse
import json
import os
import subprocess
import sys

CHILD = r"""
import json, sys, time
import numpy as np
from structdiv import backend
from structdiv.measures import all_pairs_jbd_fast
from structdiv.similarity import DistanceMatrix, similarity_from_metric
from structdiv.transport import wasserstein1

sizes, repeats, alpha = json.loads(sys.argv[1]), int(sys.argv[2]), float(sys.argv[3])
rng = np.random.default_rng(0)
n = 50
D = DistanceMatrix.from_points(rng.uniform(size=(n, 10)))
Z = similarity_from_metric(D, 1.0)

def sample(m):
    X = rng.uniform(size=(m, n))
    return X / X.sum(axis=1, keepdims=True)

def best(fn):
    fn()  # compile / warm caches
    ts = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        ts.append(time.perf_counter() - t0)
    return min(ts)

out = {"backend": backend(), "jbd_pairs": {}, "w1_pairs_per_s": None}
for m in sizes:
    P = sample(m)
    out["jbd_pairs"][m] = best(lambda: all_pairs_jbd_fast(Z, alpha, P, threads=1, gram=False))
pairs = [(sample(1)[0], sample(1)[0]) for _ in range(50)]
t = best(lambda: [wasserstein1(D, p, q) for p, q in pairs])
out["w1_pairs_per_s"] = len(pairs) / t
print(json.dumps(out))
"""


def run(disable: bool, sizes, repeats, alpha):
    env = dict(os.environ)
    env["STRUCTDIV_NO_NUMBA"] = "1" if disable else "0"
    res = subprocess.run([sys.executable, "-c", CHILD, json.dumps(sizes), str(repeats), str(alpha)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[50, 100, 200])
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--alpha", type=float, default=3.0,
                    help="order; alpha=2 would take the Gram shortcut, so the default is 3")
    args = ap.parse_args(argv)
    fast = run(False, args.sizes, args.repeats, args.alpha)
    slow = run(True, args.sizes, args.repeats, args.alpha)
    print(f"{'kernel':<22}{fast['backend']:>12}{slow['backend']:>12}{'ratio':>10}")
    for m in args.sizes:
        a, b = fast["jbd_pairs"][str(m)], slow["jbd_pairs"][str(m)]
        print(f"{'jbd all-pairs m=' + str(m):<22}{a:>11.4f}s{b:>11.4f}s{b / a:>9.1f}x")
    a, b = fast["w1_pairs_per_s"], slow["w1_pairs_per_s"]
    print(f"{'W1 solves per second':<22}{a:>12.0f}{b:>12.0f}{a / b:>9.1f}x")


if __name__ == "__main__":
    main()
