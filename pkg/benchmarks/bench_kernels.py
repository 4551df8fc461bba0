"""Compare the numba and pure-numpy kernel backends.

Times the feasibility-plane kernel in-process with both implementations,
then times a full simulator step in a subprocess per backend (the backend
is fixed at import time by ALPHABPP_PURE_NUMPY).

    python benchmarks/bench_kernels.py --states 2000
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

from alphabpp import _kernels as K

STEP_SNIPPET = r"""
import json, sys, time
import numpy as np
from alphabpp import backend, datagen, sim
from alphabpp.policy import HeuristicPolicy, GreedyPolicy
cfg = sim.SimConfig(buffer_size=int(sys.argv[1]), orientations=int(sys.argv[2]))
recs = datagen.generate_dataset("rs", int(sys.argv[3]), master_seed=1).records
pol = GreedyPolicy(HeuristicPolicy())
sim.run_episode(recs[0].items, pol, cfg)  # warm-up / jit compile
n, t = 0, 0.0
for r in recs:
    s = sim.reset(r.items, cfg)
    while not s.terminal:
        a = pol.greedy(s, cfg)
        t0 = time.perf_counter()
        s = sim.step(s, a, r.items, cfg).next_state
        t += time.perf_counter() - t0
        n += 1
print(json.dumps({"backend": backend(), "steps": n, "mean_ms": 1e3 * t / n}))
"""


def random_maps(rng, n, W=10, L=10, H=10):
    return [np.minimum(np.cumsum(rng.integers(0, 3, size=(W, L)), axis=1), H).astype(np.int64) for _ in range(n)]


def time_kernel(fn, maps, dims, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for hm, (w, l, h) in zip(maps, dims):
            fn(hm, 10, w, l, h, 0.6, 0.8, 0.95)
        best = min(best, time.perf_counter() - t0)
    return 1e6 * best / len(maps)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--states", type=int, default=2000)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--episodes", type=int, default=10)
    ap.add_argument("--buffer", type=int, default=3)
    ap.add_argument("--orient", type=int, default=1)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    maps = random_maps(rng, args.states)
    dims = [tuple(int(v) for v in rng.integers(2, 6, size=3)) for _ in maps]
    rows = [("feasibility_plane numpy", time_kernel(K.feasibility_plane_numpy, maps, dims, args.repeats), "us/call")]
    if K.HAVE_NUMBA:
        K.feasibility_plane_numba(maps[0], 10, 2, 2, 2, 0.6, 0.8, 0.95)
        rows.append(("feasibility_plane numba", time_kernel(K.feasibility_plane_numba, maps, dims, args.repeats),
                     "us/call"))
        for hm, (w, l, h) in zip(maps[:200], dims):
            a = K.feasibility_plane_numpy(hm, 10, w, l, h, 0.6, 0.8, 0.95)
            b = K.feasibility_plane_numba(hm, 10, w, l, h, 0.6, 0.8, 0.95)
            assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1]), "backends disagree"

    for flag in ("0", "1"):
        env = dict(os.environ, ALPHABPP_PURE_NUMPY=flag)
        out = subprocess.run([sys.executable, "-c", STEP_SNIPPET, str(args.buffer), str(args.orient),
                              str(args.episodes)], env=env, capture_output=True, text=True, check=True)
        res = json.loads(out.stdout)
        rows.append((f"sim.step b={args.buffer} k={args.orient} [{res['backend']}]", 1e3 * res["mean_ms"], "us/step"))

    width = max(len(r[0]) for r in rows)
    for name, value, unit in rows:
        print(f"{name:<{width}}  {value:10.2f} {unit}")


if __name__ == "__main__":
    main()
