"""Compare the NumPy and compiled dynamics kernels.

Usage: python3 benchmarks/bench_kernels.py [--states N] [--repeat R]
"""
import argparse
import timeit

import numpy as np

from motionaug.dynamics import RigidBodyModel, backend
from motionaug.motion import default_skeleton


def bench(model, states, repeat):
    kins = [model.kinematics(q) for q, _, _ in states]
    calls = {
        "rnea": lambda: [model.inverse_dynamics(q, qd, qdd, kin=k) for (q, qd, qdd), k in zip(states, kins)],
        "crba": lambda: [model.mass_matrix(kin=k) for k in kins],
        "jdot_qdot": lambda: [model.jdot_qdot(q, qd, kin=k) for (q, qd, _), k in zip(states, kins)],
    }
    return {name: min(timeit.repeat(fn, number=1, repeat=repeat)) / len(states) for name, fn in calls.items()}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--states", type=int, default=200, help="random states per timing run")
    ap.add_argument("--repeat", type=int, default=5, help="timing runs; the fastest is reported")
    args = ap.parse_args()

    model = RigidBodyModel(default_skeleton())
    rng = np.random.default_rng(0)
    states = [tuple(rng.uniform(-0.5, 0.5, 75) for _ in range(3)) for _ in range(args.states)]

    results = {}
    for name in ("python", "cython"):
        try:
            backend.use(name)
        except ImportError:
            print(f"{name}: not built, skipped")
            continue
        results[name] = bench(model, states, args.repeat)

    print(f"{'kernel':<10} " + " ".join(f"{n + ' (us)':>14}" for n in results) + "   speedup")
    for kernel in results["python"]:
        row = [results[n][kernel] * 1e6 for n in results]
        speed = f"{row[0] / row[1]:8.1f}x" if len(row) == 2 else ""
        print(f"{kernel:<10} " + " ".join(f"{v:14.1f}" for v in row) + "  " + speed)

    if len(results) == 2:
        q, qd, qdd = states[0]
        out = {}
        for name in results:
            backend.use(name)
            out[name] = model.inverse_dynamics(q, qd, qdd)
        print(f"max |tau_python - tau_cython| = {np.abs(out['python'] - out['cython']).max():.2e}")


if __name__ == "__main__":
    main()
