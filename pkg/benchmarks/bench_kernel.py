"""Benchmark the compiled integration core against the numpy fallback.

Runs the bundled 3-machine scenario under the energy-based synchronizing
feedback for a short horizon on each available backend and reports the
per-step throughput.

    python benchmarks/bench_kernel.py [--horizon 0.05] [--dt 2e-6]
"""

import argparse
import time

import numpy as np

from mmsync import _kernel
from mmsync.cli import load_config
from mmsync.potential import PotentialEvaluator
from mmsync.sim import IntegratorConfig, build_initial_state, simulate
from mmsync.steady_state import solve_pi


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--horizon", type=float, default=0.05)
    parser.add_argument("--dt", type=float, default=2e-6)
    parser.add_argument("--config", default="ieee_like_3machine")
    args = parser.parse_args()

    cfg = load_config(args.config)
    ssmap = solve_pi(cfg.params, cfg.controller.omega0, cfg.controller.i_r_star)
    evaluator = PotentialEvaluator(cfg.params, ssmap)
    x0 = build_initial_state(cfg.params, ssmap, "zero")
    icfg = IntegratorConfig(
        method="rk4_fixed", dt=args.dt, t_end=args.horizon, record_every=args.horizon
    )
    n_steps = int(round(args.horizon / args.dt))

    results = {}
    reference = None
    for backend in _kernel.available_backends():
        t0 = time.perf_counter()
        traj = simulate(
            cfg.params, cfg.controller, x0, icfg, ssmap=ssmap, evaluator=evaluator, backend=backend
        )
        wall = time.perf_counter() - t0
        results[backend] = (wall, n_steps / wall)
        final = traj.final_state.pack()
        if reference is None:
            reference = final
        else:
            drift = np.linalg.norm(final - reference) / (1 + np.linalg.norm(reference))
            print(f"cross-backend final-state agreement: {drift:.3e}")

    print(f"\n{n_steps} RK4 steps, {cfg.params.n} machines, controller {cfg.controller.kind}")
    print(f"{'backend':<10} {'wall [s]':>10} {'steps/s':>12}")
    for backend, (wall, rate) in results.items():
        print(f"{backend:<10} {wall:>10.3f} {rate:>12.0f}")
    if len(results) == 2:
        speedup = results["python"][0] / results["compiled"][0]
        print(f"compiled speedup: {speedup:.0f}x")


if __name__ == "__main__":
    main()
