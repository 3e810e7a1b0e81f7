"""Command-line front end: scenario configs, subcommands, CSV/report emission.

Exit codes: 0 success, 1 runtime failure, 2 config error. All subcommands
are deterministic given the config and seed.
"""

import argparse
import json
import sys
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .algebra import wrap_angle
from .analysis import boundedness_probe
from .control import ControllerSpec, check_dissipation, u_star
from .model import ConfigError, SystemParams
from .potential import (
    MinimizeOptions,
    PotentialEvaluator,
    minimize,
    scan_rows,
    scan_torus,
)
from .sim import (
    IntegratorConfig,
    SimulationAborted,
    build_initial_state,
    fastest_time_constant,
    simulate,
)
from .steady_state import k_net, network_flow, solve_pi


@dataclass
class ScenarioConfig:
    """Full scenario: parameters, controller, initial state, integrator, outputs."""

    params: SystemParams
    controller: ControllerSpec
    initial: dict
    integrator: IntegratorConfig
    outputs: dict
    seed: int = 0

    @classmethod
    def from_dict(cls, d):
        params = SystemParams.from_dict(d)
        if "controller" not in d:
            raise ConfigError("missing section controller")
        try:
            controller = ControllerSpec.from_dict(d["controller"])
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"controller: {exc}") from exc
        if controller.i_r_star.shape[0] != params.n:
            raise ConfigError(
                f"controller.i_r_star: expected {params.n} entries, got {controller.i_r_star.shape[0]}"
            )
        initial = d.get("initial", {"kind": "zero"})
        if "kind" not in initial:
            raise ConfigError("initial: missing field kind")
        try:
            integrator = IntegratorConfig.from_dict(d.get("integrator", {}))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"integrator: {exc}") from exc
        outputs = d.get("outputs", {"trajectory_csv": "trajectory.csv", "summary": "summary.txt"})
        return cls(
            params=params,
            controller=controller,
            initial=initial,
            integrator=integrator,
            outputs=outputs,
            seed=int(d.get("seed", 0)),
        )

    def to_dict(self):
        d = self.params.to_dict()
        d["controller"] = self.controller.to_dict()
        d["initial"] = self.initial
        d["integrator"] = self.integrator.to_dict()
        d["outputs"] = self.outputs
        d["seed"] = self.seed
        return d


def resolve_config_path(name: str) -> Path:
    """Accept a filesystem path or the stem of a bundled config."""
    p = Path(name)
    if p.exists():
        return p
    bundled = resources.files("mmsync") / "configs" / (name if name.endswith(".json") else f"{name}.json")
    if bundled.is_file():
        return Path(str(bundled))
    raise ConfigError(f"config not found: {name}")


def load_config(name: str) -> ScenarioConfig:
    path = resolve_config_path(name)
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return ScenarioConfig.from_dict(raw)


def _initial_state(cfg: ScenarioConfig, ssmap):
    init = dict(cfg.initial)
    kind = init.pop("kind")
    try:
        return build_initial_state(cfg.params, ssmap, kind, **init)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"initial: {exc}") from exc


def _h_tilde_verdict(traj, i_r_star):
    """Lock time of the rotor currents and shifted-energy monotonicity after it."""
    lock_level = 1e-3 * np.linalg.norm(i_r_star)
    below = traj.err_ir < lock_level
    if not below.any():
        return None, None
    lock = int(np.argmax(below))
    ht = traj.H_tilde[lock:]
    slack = 1e-6 * abs(ht[0])
    monotone = bool(np.all(np.diff(ht) <= slack))
    return float(traj.t[lock]), monotone


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    if args.allow_large_dt:
        cfg.integrator.allow_large_dt = True
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    ssmap = solve_pi(cfg.params, cfg.controller.omega0, cfg.controller.i_r_star)
    evaluator = PotentialEvaluator(cfg.params, ssmap)
    if args.dry_run:
        tau = fastest_time_constant(cfg.params)
        print(f"config: {args.config}")
        print(f"machines: {cfg.params.n}")
        print(f"lines: {cfg.params.m}")
        print(f"controller: {cfg.controller.kind}")
        print(f"pi_residual: {ssmap.sylvester_residual:.6e}")
        print(f"hurwitz_abscissa: {ssmap.spectral_abscissa:.6e}")
        print(f"y_net_condition_number: {np.linalg.cond(ssmap.y_net):.6e}")
        print(f"fastest_time_constant_s: {tau:.6e}")
        print(f"dt_limit_s: {0.2 * tau:.6e}")
        print(f"dt_s: {cfg.integrator.dt:.6e}")
        return 0

    x0 = _initial_state(cfg, ssmap)
    csv_path = out_dir / cfg.outputs.get("trajectory_csv", "trajectory.csv")
    summary_path = out_dir / cfg.outputs.get("summary", "summary.txt")

    t0 = time.time()
    try:
        traj = simulate(cfg.params, cfg.controller, x0, cfg.integrator, ssmap=ssmap, evaluator=evaluator)
    except SimulationAborted as exc:
        wall = time.time() - t0
        partial = csv_path.with_suffix(csv_path.suffix + ".partial")
        exc.trajectory.to_csv(partial)
        print(f"simulation aborted: {exc} (partial CSV: {partial})", file=sys.stderr)
        with open(summary_path, "w") as fh:
            fh.write(f"status: aborted\nt_fail_s: {exc.t_fail:.9g}\nwall_time_s: {wall:.3f}\n")
        return 1
    wall = time.time() - t0

    traj.to_csv(csv_path)
    probe = boundedness_probe(traj)
    lock_time, monotone = _h_tilde_verdict(traj, cfg.controller.i_r_star)
    omega0 = cfg.controller.omega0
    pairwise = traj.pairwise_angle_diffs()
    lines = [
        f"status: completed",
        f"backend: {traj.backend}",
        f"controller: {cfg.controller.kind}",
        f"t_end_s: {traj.t[-1]:.9g}",
        f"records: {traj.t.shape[0]}",
        f"wall_time_s: {wall:.3f}",
        f"final_err_omega_rel: {np.abs(traj.omega[-1] - omega0).max() / omega0:.6e}",
        f"final_err_ir_rel: {(np.abs(traj.i_r[-1] - traj.i_r_star) / traj.i_r_star).max():.6e}",
        f"final_pairwise_angle_max_rad: {np.abs(pairwise[-1]).max(initial=0.0):.6e}",
        f"h_tilde_lock_time_s: {'none' if lock_time is None else f'{lock_time:.6g}'}",
        f"h_tilde_monotone_after_lock: {'n/a' if monotone is None else str(monotone).lower()}",
        f"boundedness_growth_flag: {str(probe.any_growth).lower()}",
    ]
    for name, value in probe.max_norms.items():
        lines.append(f"max_norm_{name}: {value:.6e}")
    with open(summary_path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print("\n".join(lines))
    print(f"trajectory_csv: {csv_path}")
    return 0


def _parse_theta_list(values, n):
    out = []
    for chunk in values:
        theta = np.array([float(x) for x in chunk.split(",")], dtype=float)
        if theta.shape[0] != n:
            raise ConfigError(f"--theta-dq: expected {n} angles, got {theta.shape[0]}")
        out.append(theta)
    return out


def cmd_steady_state(args) -> int:
    cfg = load_config(args.config)
    p = cfg.params
    ssmap = solve_pi(p, cfg.controller.omega0, cfg.controller.i_r_star)
    thetas = _parse_theta_list(args.theta_dq, p.n) if args.theta_dq else [np.zeros(p.n)]

    print(f"pi_residual: {ssmap.sylvester_residual:.6e}")
    print(f"hurwitz_abscissa: {ssmap.spectral_abscissa:.6e}")
    print("y_net:")
    for row in ssmap.y_net:
        print("  " + ",".join(f"{x:.9g}" for x in row))
    for theta in thetas:
        kn = k_net(ssmap, p, theta)
        u = u_star(ssmap, p, theta, cfg.controller)
        i_s, v, i_t = network_flow(ssmap, p, theta)
        kcl = ssmap.impedances.Y_c @ v + p.E_blk() @ i_t + i_s
        scale = 1.0 + np.linalg.norm(i_s)
        print(f"theta_dq: {','.join(f'{x:.9g}' for x in theta)}")
        print("k_net:")
        for row in kn:
            print("  " + ",".join(f"{x:.9g}" for x in row))
        print(f"u_star_m: {','.join(f'{x:.9g}' for x in u.u_m)}")
        print(f"u_star_r: {','.join(f'{x:.9g}' for x in u.u_r)}")
        print(f"flow_i_s: {','.join(f'{x:.9g}' for x in i_s)}")
        print(f"flow_v: {','.join(f'{x:.9g}' for x in v)}")
        print(f"flow_i_t: {','.join(f'{x:.9g}' for x in i_t)}")
        print(f"kcl_residual_rel: {np.linalg.norm(kcl) / scale:.6e}")
    return 0


def cmd_potential(args) -> int:
    cfg = load_config(args.config)
    p = cfg.params
    ssmap = solve_pi(p, cfg.controller.omega0, cfg.controller.i_r_star)
    evaluator = PotentialEvaluator(p, ssmap)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    if args.action == "scan":
        axis, values = scan_torus(evaluator, args.resolution)
        path = out_dir / "potential_scan.csv"
        header = [f"theta_{i+2}" for i in range(p.n - 1)] + ["S"]
        with open(path, "w") as fh:
            fh.write(",".join(header) + "\n")
            for row in scan_rows(axis, values):
                fh.write(",".join(f"{x:.17g}" for x in row) + "\n")
        print(f"scan_csv: {path}")
        print(f"rows: {values.size}")
        flat_idx = int(np.argmin(values))
        idx = np.unravel_index(flat_idx, values.shape)
        print(f"grid_min_S: {values[idx]:.9e}")
        print(f"grid_min_theta: {','.join(f'{axis[i]:.9g}' for i in idx)}")
        return 0

    seed = args.seed if args.seed is not None else cfg.seed
    rng = np.random.default_rng(seed)
    opts = MinimizeOptions()
    results = []
    for k in range(args.restarts):
        theta0 = np.concatenate([[0.0], rng.uniform(-np.pi, np.pi, p.n - 1)])
        results.append(minimize(evaluator, theta0, opts))
    best = min(results, key=lambda r: r.value)
    print(f"restarts: {args.restarts}")
    print(f"seed: {seed}")
    for k, r in enumerate(results):
        print(
            f"restart_{k}: converged={str(r.converged).lower()} S={r.value:.9e} "
            f"grad_norm={r.grad_norm:.3e} class={r.classification} "
            f"theta={','.join(f'{wrap_angle(x):.6g}' for x in r.theta)}"
        )
    print(f"best_S: {best.value:.9e}")
    print(f"best_theta: {','.join(f'{wrap_angle(x):.6g}' for x in best.theta)}")
    print(f"best_class: {best.classification}")
    return 0


def cmd_check(args) -> int:
    cfg = load_config(args.config)
    p = cfg.params
    ssmap = solve_pi(p, cfg.controller.omega0, cfg.controller.i_r_star)
    seed = args.seed if args.seed is not None else cfg.seed
    rng = np.random.default_rng(seed)
    samples = rng.uniform(-np.pi, np.pi, size=(args.samples, p.n))
    report = check_dissipation(p, ssmap, samples)
    print(f"pi_residual: {ssmap.sylvester_residual:.6e}")
    print(f"hurwitz_abscissa: {ssmap.spectral_abscissa:.6e}")
    print(f"dissipation_samples: {args.samples}")
    print(f"dissipation_worst_margin: {report.worst_margin:.6e}")
    print(f"dissipation_worst_theta: {','.join(f'{x:.6g}' for x in report.worst_theta)}")
    print(f"dissipation_route_equivalence_max_diff: {report.equivalence_max_diff:.3e}")
    print(f"dissipation_passed: {str(report.passed).lower()}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="mmsync", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="integrate a scenario and write CSV + summary")
    sim.add_argument("--config", required=True)
    sim.add_argument("--out", default=".")
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--dry-run", action="store_true")
    sim.add_argument("--allow-large-dt", action="store_true")
    sim.set_defaults(func=cmd_simulate)

    ss = sub.add_parser("steady-state", help="print regulator map diagnostics")
    ss.add_argument("--config", required=True)
    ss.add_argument("--theta-dq", action="append", default=[],
                    help="comma-separated angles; repeatable")
    ss.set_defaults(func=cmd_steady_state)

    pot = sub.add_parser("potential", help="torus scan or minimization of the network potential")
    pot.add_argument("action", choices=["scan", "minimize"])
    pot.add_argument("--config", required=True)
    pot.add_argument("--out", default=".")
    pot.add_argument("--resolution", type=int, default=360)
    pot.add_argument("--restarts", type=int, default=20)
    pot.add_argument("--seed", type=int, default=None)
    pot.set_defaults(func=cmd_potential)

    chk = sub.add_parser("check", help="dissipation-condition certificate report")
    chk.add_argument("--config", required=True)
    chk.add_argument("--samples", type=int, default=100)
    chk.add_argument("--seed", type=int, default=None)
    chk.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
