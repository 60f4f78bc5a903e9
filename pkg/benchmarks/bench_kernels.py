"""Compare the compiled and pure-Python kernels on the same workloads.

    python3 benchmarks/bench_kernels.py [--walks N] [--samples N] [--repeat R]

Both backends consume the same random stream, so the outputs are checked
for equality before timings are reported.
"""

import argparse
import time

import numpy as np

from voterzeal import _backend
from voterzeal.dynamics import SimConfig, simulate
from voterzeal.equilibrium import random_walk_counts
from voterzeal.network import generate_planted


def best_of(fn, repeat):
    times, out = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--walks", type=int, default=50_000)
    ap.add_argument("--samples", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=3)
    a = ap.parse_args()

    net = generate_planted(5, 200, 5, 0.9, seed=0, degree=10)
    node = net.ids[int(net.users[0])]
    cfg = SimConfig(burn_in=10_000, samples=a.samples, thinning=10, seed=0)
    workloads = {
        "absorbing walks": lambda: random_walk_counts(net, node, a.walks, seed=1)[0],
        "voter dynamics": lambda: simulate(net, cfg).frequencies,
    }
    backends = _backend.available()
    if "compiled" not in backends:
        print("compiled kernels not built; only the Python fallback is timed")
    before = _backend.name()
    print(f"{'workload':<18}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for label, fn in workloads.items():
        timings, outputs = {}, {}
        for b in backends:
            _backend.use(b)
            timings[b], outputs[b] = best_of(fn, a.repeat)
        if len(outputs) == 2:
            assert np.array_equal(outputs["python"], outputs["compiled"]), label
        speed = timings["python"] / timings["compiled"] if "compiled" in timings else float("nan")
        print(f"{label:<18}" + "".join(f"{timings[b]:11.3f}s" for b in backends) + f"{speed:9.1f}x")
    _backend.use(before)


if __name__ == "__main__":
    main()
