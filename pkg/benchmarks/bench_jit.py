#!/usr/bin/env python3
"""Time the hot simulation kernels with numba enabled against the pure
interpreted fallback (ADAPTBUS_DISABLE_JIT=1).

Each measurement runs in a child process so the decorator choice is fixed at
import time; children warm the kernels (and numba's on-disk cache) before
timing, so compile time is excluded.

Usage: python benchmarks/bench_jit.py [--horizon N] [--repeat R]
"""

import argparse
import json
import os
import subprocess
import sys

CHILD = """
import json, sys, time
import numpy as np
from adaptbus import kernels
from adaptbus._jit import JIT_ENABLED
from adaptbus.plant import PlantModel

params = json.loads(sys.argv[1])
T = params["horizon"]
repeat = params["repeat"]
model = PlantModel(a=[-1.1, 0.3], b=[1.2, 0.36])
k = np.arange(T + 2)
yref = np.sin(0.35 * k)
theta0 = np.zeros(5); theta0[-1] = 1.0
dist = np.zeros(T + 1)
empty = np.zeros(0)
rng = np.random.default_rng(0)
u = rng.normal(size=T)

def run_closed():
    return kernels.simulate_fixed_delay(model.a, model.b, 2, 0.5, theta0.copy(),
                                        yref, dist, empty, empty, True)

def run_open():
    kernels.simulate_difference(model.a, model.b, 2, u, dist, empty, empty)
    alpha, beta, F = model.predictor(2)
    kernels.simulate_predictor(alpha.asarray(), beta.asarray(), F.asarray(), 2,
                               u, dist, empty, empty)

results = {"jit": JIT_ENABLED}
for name, fn in (("closed_loop", run_closed), ("open_loop", run_open)):
    fn()  # warm-up: triggers compilation on the jit path
    best = min(
        (lambda t0=time.perf_counter(): (fn(), time.perf_counter() - t0)[1])()
        for _ in range(repeat)
    )
    results[name] = best
print(json.dumps(results))
"""


def run_child(disable_jit: bool, horizon: int, repeat: int) -> dict:
    env = dict(os.environ)
    if disable_jit:
        env["ADAPTBUS_DISABLE_JIT"] = "1"
    else:
        env.pop("ADAPTBUS_DISABLE_JIT", None)
    proc = subprocess.run(
        [sys.executable, "-c", CHILD, json.dumps({"horizon": horizon, "repeat": repeat})],
        capture_output=True, text=True, env=env,
    )
    if proc.returncode != 0:
        raise RuntimeError(proc.stderr)
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--horizon", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    jit = run_child(False, args.horizon, args.repeat)
    py = run_child(True, args.horizon, args.repeat)
    if not jit["jit"]:
        print("warning: numba unavailable; both columns are the fallback")
    print(f"horizon = {args.horizon} samples, best of {args.repeat}")
    print(f"{'kernel':<14} {'numba':>12} {'fallback':>12} {'speedup':>9}")
    for name in ("closed_loop", "open_loop"):
        s = py[name] / jit[name] if jit[name] else float("nan")
        print(f"{name:<14} {jit[name]:>10.4f}s {py[name]:>10.4f}s {s:>8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
