"""Compare the compiled and pure-numpy kernel paths.

Each workload runs in a fresh interpreter, once with numba enabled and once
with ``JOINTWG_DISABLE_NUMBA=1``, because the path is chosen at import time.
Compilation is excluded by a warm-up call before timing.

    python benchmarks/bench_kernels.py [--repeat 3]
"""

import argparse
import json
import os
import subprocess
import sys

WORKLOAD = r"""
import json, sys, time, warnings
import numpy as np
from jointwg import _accel
from jointwg.bayes import run_chain
from jointwg.censoring import generate_joint_sample
from jointwg.datasets import FORECAST_SETTINGS, forecast_schemes, jute_example
from jointwg.dist import WGParams

warnings.simplefilter("ignore")
repeat = int(sys.argv[1])
plan = forecast_schemes()[40]
params = FORECAST_SETTINGS["p=0.13"]
sample = jute_example()
init = [WGParams(41.9214, 16.3688, 0.017), WGParams(55.6926, 3.3669, 0.134)]


def walk():
    rng = np.random.default_rng(0)
    for _ in range(2000):
        generate_joint_sample(params, plan, rng)


def chain():
    run_chain(sample, Q=20000, M=1000, rng=1, init=init)


out = {"accelerated": _accel.ENABLED}
for name, fn in (("joint_walk x2000", walk), ("mcmc_sweeps Q=20000", chain)):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    out[name] = min(times)
print(json.dumps(out))
"""


def measure(disable: bool, repeat: int) -> dict:
    env = dict(os.environ)
    env.pop("JOINTWG_DISABLE_NUMBA", None)
    if disable:
        env["JOINTWG_DISABLE_NUMBA"] = "1"
    res = subprocess.run(
        [sys.executable, "-c", WORKLOAD, str(repeat)], env=env, capture_output=True, text=True, check=True
    )
    return json.loads(res.stdout)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3, help="timed runs per workload (best is reported)")
    args = parser.parse_args(argv)
    fast = measure(False, args.repeat)
    slow = measure(True, args.repeat)
    if not fast.pop("accelerated"):
        print("numba is not available; both columns use the numpy path")
    slow.pop("accelerated")
    print(f"{'workload':<22}{'numba [s]':>11}{'numpy [s]':>11}{'speed-up':>10}")
    for name in fast:
        print(f"{name:<22}{fast[name]:>11.3f}{slow[name]:>11.3f}{slow[name] / fast[name]:>9.1f}x")


if __name__ == "__main__":
    main()
