"""Time the compiled and pure-Python plant kernels on the same workload.

    python benchmarks/bench_kernel.py [--steps N] [--repeat R]
"""
import argparse
import time

import numpy as np

from vselbow import kernel as K
from vselbow.plant import Simulator
from vselbow.presets import default_gains, default_plant


def workload(backend, steps):
    cfg = default_plant("AA")
    sim = Simulator(cfg, default_gains("AA"), backend=backend)
    sim.reset(0.3, 2.0)
    sim.set_motor_refs(*cfg.layout.inverse(1.5, 4.0))
    t0 = time.perf_counter()
    sim.advance(steps)
    return time.perf_counter() - t0, sim.S.copy()


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    backends = ["python"] + (["cython"] if K.c_advance is not None else [])
    results = {}
    for b in backends:
        times = []
        for _ in range(args.repeat):
            dt, state = workload(b, args.steps)
            times.append(dt)
        results[b] = (min(times), state)
        rate = args.steps / min(times)
        print(f"{b:>7}: {min(times) * 1e3:9.2f} ms for {args.steps} steps ({rate / 1e6:.3f} Msteps/s)")
    if len(results) == 2:
        speedup = results["python"][0] / results["cython"][0]
        same = np.array_equal(results["python"][1], results["cython"][1])
        print(f"speedup {speedup:.1f}x, final states identical: {same}")
    else:
        print("compiled kernel not built; only the Python fallback was timed")


if __name__ == "__main__":
    main()
