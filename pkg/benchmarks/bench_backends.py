"""Compare the numba and pure-numpy kernel backends.

Each backend runs in its own interpreter because the backend is chosen at
import time from QUASISTEP_DISABLE_NUMBA. Usage:

    python3 benchmarks/bench_backends.py [--repeat 3]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from quasistep import backend_name
from quasistep import kernels
from quasistep.integrators import StepperConfig, integrate
from quasistep.problems import manufactured, symmetric_system_problem, transport_problem
from quasistep.spaces import SpaceConfig
from quasistep.tableau import gauss

repeat = int(sys.argv[1])

def best(fn):
    fn()  # warm up (jit compile / cache load)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)

rng = np.random.default_rng(0)
sp = SpaceConfig(128)
coef = 1.0 + 0.5 * np.sin(sp.x)
w = rng.standard_normal(128)
p = transport_problem(sp, 1.0, 1.0)
blocks = np.stack([p.assemble_A(rng.standard_normal(128)) for _ in range(2)])
ainv = np.linalg.inv(gauss(2).a)
big = kernels.stage_system(ainv, 0.025, blocks)

def lu_256():
    a = big.copy()
    kernels.lu_factor(a, 1e-14)

def skew_apply():
    for _ in range(1000):
        kernels.split_skew_apply(coef, w, 10.0)

def midpoint_run():
    q = manufactured(transport_problem(sp, 1.0, 1.0))
    integrate(q, q.exact_solution(0.0), StepperConfig(1 / 160, "midpoint_fi"), 1.0)

def gauss2_system_run():
    q = manufactured(symmetric_system_problem(SpaceConfig(64)))
    integrate(q, q.exact_solution(0.0), StepperConfig(1 / 80, gauss(2)), 1.0)

out = {"backend": backend_name()}
for name, fn in [("lu_factor 256x256", lu_256), ("split_skew_apply x1000", skew_apply),
                 ("midpoint_fi P1 N=128, 160 steps", midpoint_run),
                 ("gauss(2) P2 N=64, 80 steps", gauss2_system_run)]:
    out[name] = best(fn)
print(json.dumps(out))
"""


def run_backend(disable_numba, repeat):
    env = dict(os.environ, QUASISTEP_DISABLE_NUMBA="1" if disable_numba else "0")
    res = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    fast = run_backend(False, args.repeat)
    slow = run_backend(True, args.repeat)
    cases = [k for k in fast if k != "backend"]
    width = max(len(c) for c in cases)
    print(f"{'case':<{width}}  {fast['backend']:>10}  {slow['backend']:>10}  speedup")
    for c in cases:
        print(f"{c:<{width}}  {fast[c]:>9.4f}s  {slow[c]:>9.4f}s  {slow[c] / fast[c]:>6.1f}x")


if __name__ == "__main__":
    main()
