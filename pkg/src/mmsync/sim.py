"""Time integration of the open- and closed-loop systems with recording.

Fixed-step RK4 is the default for reproducibility; adaptive RK45 is offered
for long horizons. The hot loop runs in the compiled kernel when built and
in the numpy fallback otherwise; recorded rows are post-processed here
(currents, inputs, energies, error norms).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernel
from .algebra import wrap_angle
from .analysis import to_tilde, shifted_energy
from .control import u_mmsf_energy, u_mmsf_highgain, u_omega, u_star
from .model import ControlInput, State, currents_from_fluxes, fluxes_from_currents, hamiltonian
from .potential import PotentialEvaluator, potential
from .steady_state import assemble_driven_system, network_flow, solve_pi

_KIND_CODES = {
    "open_loop_constant": 0,
    "omega_invariance": 1,
    "steady_state": 0,
    "mmsf_energy": 2,
    "mmsf_highgain": 3,
}


@dataclass
class IntegratorConfig:
    method: str = "rk4_fixed"
    dt: float = 2e-6
    t_end: float = 1.0
    record_every: float = 1e-3
    rtol: float = 1e-8
    atol: float = 1e-6
    dt_min: float = 1e-12
    dt_max: float = 1e-3
    allow_large_dt: bool = False

    def __post_init__(self):
        if self.method not in ("rk4_fixed", "rk45_adaptive"):
            raise ValueError(f"unknown integrator method {self.method!r}")
        if self.dt <= 0 or self.t_end <= 0 or self.record_every <= 0:
            raise ValueError("dt, t_end and record_every must be positive")
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("rtol and atol must be positive")

    def to_dict(self):
        return {
            "method": self.method,
            "dt": self.dt,
            "t_end": self.t_end,
            "record_every": self.record_every,
            "rtol": self.rtol,
            "atol": self.atol,
            "dt_min": self.dt_min,
            "dt_max": self.dt_max,
        }

    @classmethod
    def from_dict(cls, d):
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in d.items() if k in known})


@dataclass
class Trajectory:
    """Recorded samples of a run plus per-sample diagnostics."""

    params: object
    omega0: float
    i_r_star: np.ndarray
    t: np.ndarray
    omega: np.ndarray
    theta: np.ndarray
    i_r: np.ndarray
    i_s: np.ndarray
    v: np.ndarray
    i_t: np.ndarray
    u_m: np.ndarray
    u_r: np.ndarray
    H: np.ndarray
    H_tilde: np.ndarray
    S: np.ndarray
    err_omega: np.ndarray
    err_ir: np.ndarray
    theta0: np.ndarray
    final_state: State
    backend: str = field(default_factory=lambda: _kernel.BACKEND)

    @property
    def theta_dq(self):
        """Wrapped rotating-frame angles per record."""
        return wrap_angle(self.theta - self.theta0[:, None])

    def pairwise_angle_diffs(self):
        """Wrapped pairwise angle differences, shape (records, n*(n-1)/2)."""
        n = self.theta.shape[1]
        cols = [wrap_angle(self.theta[:, i] - self.theta[:, j]) for i in range(n) for j in range(i + 1, n)]
        return np.column_stack(cols) if cols else np.zeros((self.theta.shape[0], 0))

    def to_csv(self, path):
        n = self.theta.shape[1]
        m2 = self.i_t.shape[1]
        header = (
            ["t"]
            + [f"omega_{i+1}" for i in range(n)]
            + [f"theta_{i+1}" for i in range(n)]
            + [f"i_r_{i+1}" for i in range(n)]
            + [f"i_s_{i+1}" for i in range(2 * n)]
            + [f"v_{i+1}" for i in range(2 * n)]
            + [f"i_t_{i+1}" for i in range(m2)]
            + [f"u_m_{i+1}" for i in range(n)]
            + [f"u_r_{i+1}" for i in range(n)]
            + ["H", "H_tilde", "S", "err_omega", "err_ir"]
            + [f"theta_dq_{i+1}" for i in range(n)]
        )
        theta_dq = self.theta_dq
        with open(path, "w") as fh:
            fh.write(",".join(header) + "\n")
            for k in range(self.t.shape[0]):
                row = np.concatenate(
                    [
                        [self.t[k]],
                        self.omega[k],
                        self.theta[k],
                        self.i_r[k],
                        self.i_s[k],
                        self.v[k],
                        self.i_t[k],
                        self.u_m[k],
                        self.u_r[k],
                        [self.H[k], self.H_tilde[k], self.S[k], self.err_omega[k], self.err_ir[k]],
                        theta_dq[k],
                    ]
                )
                fh.write(",".join(f"{x:.17g}" for x in row) + "\n")


class SimulationAborted(RuntimeError):
    """Integration failed; carries the partial trajectory and failure time."""

    def __init__(self, message, t_fail, trajectory):
        super().__init__(message)
        self.t_fail = t_fail
        self.trajectory = trajectory


def fastest_time_constant(params) -> float:
    """Fastest decay time of the linear electrical subsystem."""
    _, Q, A, _ = assemble_driven_system(params, 1.0)
    eigs = np.linalg.eigvals(-np.linalg.solve(Q, A))
    return 1.0 / float(np.max(-eigs.real))


def slowest_time_constant(params) -> float:
    """Slowest decay time of the linear electrical subsystem."""
    _, Q, A, _ = assemble_driven_system(params, 1.0)
    eigs = np.linalg.eigvals(-np.linalg.solve(Q, A))
    return 1.0 / float(np.min(-eigs.real))


def build_initial_state(params, ssmap, kind, theta_dq=None, **fields) -> State:
    """Initial states: all-zero, on the steady flow, or user-specified co-energy values."""
    if kind == "zero":
        return State.zero(params)
    if kind == "on_gamma":
        theta = np.zeros(params.n) if theta_dq is None else np.asarray(theta_dq, float).ravel()
        i_s, v, i_t = network_flow(ssmap, params, theta)
        lam_s, lam_r = fluxes_from_currents(params, theta, i_s, ssmap.i_r_star)
        return State(
            omega=ssmap.omega0 * np.ones(params.n),
            theta=theta,
            lam_r=lam_r,
            lam_s=lam_s,
            v=v,
            i_t=i_t,
        )
    if kind == "custom":
        required = ("omega", "theta", "i_r", "i_s", "v", "i_t")
        missing = [k for k in required if k not in fields]
        if missing:
            raise ValueError(f"custom initial state missing fields: {missing}")
        theta = np.asarray(fields["theta"], float).ravel()
        lam_s, lam_r = fluxes_from_currents(params, theta, fields["i_s"], fields["i_r"])
        return State(
            omega=fields["omega"],
            theta=theta,
            lam_r=lam_r,
            lam_s=lam_s,
            v=fields["v"],
            i_t=fields["i_t"],
        )
    raise ValueError(f"unknown initial-state kind {kind!r}")


def controller_function(params, spec, ssmap=None, evaluator=None):
    """Pure state-feedback closure for a controller spec (reference path)."""
    if spec.kind == "open_loop_constant":
        if spec.u_m_const is None or spec.u_r_const is None:
            raise ValueError("open_loop_constant requires u_m and u_r")
        u = ControlInput(u_m=spec.u_m_const, u_r=spec.u_r_const)
        return lambda state: u
    if spec.kind == "omega_invariance":
        return lambda state: u_omega(params, state, spec)
    if spec.kind == "steady_state":
        theta_dq = spec.theta_dq if spec.theta_dq is not None else np.zeros(params.n)
        u = u_star(ssmap, params, theta_dq, spec)
        return lambda state: u
    if spec.kind == "mmsf_energy":
        return lambda state: u_mmsf_energy(params, ssmap, evaluator, state, spec)
    if spec.kind == "mmsf_highgain":
        return lambda state: u_mmsf_highgain(params, ssmap, state, spec)
    raise ValueError(f"unknown controller kind {spec.kind!r}")


def _kernel_inputs(params, spec, ssmap, evaluator):
    n = params.n
    code = _KIND_CODES[spec.kind]
    pi_s = np.ascontiguousarray(ssmap.pi_s)
    ns = np.ascontiguousarray(evaluator.ns_matrix)
    kd = np.ascontiguousarray(evaluator.kd_matrix)
    u_const = np.zeros(2 * n)
    if spec.kind == "open_loop_constant":
        if spec.u_m_const is None or spec.u_r_const is None:
            raise ValueError("open_loop_constant requires u_m and u_r")
        u_const = np.concatenate([spec.u_m_const, spec.u_r_const])
    elif spec.kind == "steady_state":
        theta_dq = spec.theta_dq if spec.theta_dq is not None else np.zeros(n)
        u = u_star(ssmap, params, theta_dq, spec)
        u_const = u.pack()
    args = (
        np.ascontiguousarray(params.M_r),
        np.ascontiguousarray(params.D_r),
        np.ascontiguousarray(params.L_r),
        np.ascontiguousarray(params.R_r),
        np.ascontiguousarray(params.L_m),
        np.ascontiguousarray(params.L_s),
        np.ascontiguousarray(params.R_s),
        np.ascontiguousarray(params.C),
        np.ascontiguousarray(params.G),
        np.ascontiguousarray(params.L_t),
        np.ascontiguousarray(params.R_t),
        np.ascontiguousarray(params.E),
        float(spec.omega0),
        np.ascontiguousarray(spec.i_r_star),
        pi_s,
        ns,
        kd,
        u_const,
    )
    return code, args


def simulate(params, spec, x0: State, config: IntegratorConfig,
             ssmap=None, evaluator=None, backend=None) -> Trajectory:
    """Integrate the closed loop and return the recorded trajectory.

    Deterministic for a given config. Raises SimulationAborted (with the
    partial trajectory attached) on non-finite states or step underflow.
    """
    if ssmap is None:
        ssmap = solve_pi(params, spec.omega0, spec.i_r_star)
    if evaluator is None:
        evaluator = PotentialEvaluator(params, ssmap)

    if config.method == "rk4_fixed":
        tau_fast = fastest_time_constant(params)
        if config.dt > 0.2 * tau_fast and not config.allow_large_dt:
            raise ValueError(
                f"dt={config.dt:g} exceeds 0.2 * fastest time constant ({0.2 * tau_fast:g}); "
                "pass allow_large_dt to override"
            )

    code, args = _kernel_inputs(params, spec, ssmap, evaluator)
    x0_ext = np.concatenate([x0.pack(), [0.0]])
    N = x0_ext.shape[0]
    kern = _kernel.get_backend(backend) if backend else _kernel
    backend_name = backend or _kernel.BACKEND

    if config.method == "rk4_fixed":
        n_steps = max(1, int(round(config.t_end / config.dt)))
        stride = max(1, int(round(config.record_every / config.dt)))
        n_records = n_steps // stride + 1 + (1 if n_steps % stride else 0)
        out_times = np.empty(n_records)
        out_states = np.empty((n_records, N))
        status, rec, t_fail = kern.run_fixed_rk4(
            code, x0_ext, config.dt, n_steps, stride, *args, out_times, out_states
        )
    else:
        n_records = int(math.ceil(config.t_end / config.record_every)) + 2
        out_times = np.empty(n_records)
        out_states = np.empty((n_records, N))
        status, rec, t_fail = kern.run_adaptive(
            code, x0_ext, config.t_end, config.rtol, config.atol,
            config.dt_min, config.dt_max, config.record_every, *args, out_times, out_states
        )

    traj = _postprocess(params, spec, ssmap, evaluator, out_times[:rec], out_states[:rec], backend_name)
    if status == _kernel.STATUS_NONFINITE:
        raise SimulationAborted(f"non-finite state at t={t_fail:g} s", t_fail, traj)
    if status == _kernel.STATUS_DT_UNDERFLOW:
        raise SimulationAborted(f"adaptive step underflow at t={t_fail:g} s", t_fail, traj)
    return traj


def _postprocess(params, spec, ssmap, evaluator, times, states, backend_name) -> Trajectory:
    n, m = params.n, params.m
    R = times.shape[0]
    cols = {
        "omega": np.empty((R, n)),
        "theta": np.empty((R, n)),
        "i_r": np.empty((R, n)),
        "i_s": np.empty((R, 2 * n)),
        "v": np.empty((R, 2 * n)),
        "i_t": np.empty((R, 2 * m)),
        "u_m": np.empty((R, n)),
        "u_r": np.empty((R, n)),
    }
    H = np.empty(R)
    H_tilde = np.empty(R)
    S_vals = np.empty(R)
    err_omega = np.empty(R)
    err_ir = np.empty(R)
    theta0 = states[:, -1].copy()
    control = controller_function(params, spec, ssmap, evaluator)
    final_state = None
    for k in range(R):
        state = State.unpack(params, states[k, :-1])
        i_s, i_r = currents_from_fluxes(params, state.theta, state.lam_s, state.lam_r)
        u = control(state)
        cols["omega"][k] = state.omega
        cols["theta"][k] = state.theta
        cols["i_r"][k] = i_r
        cols["i_s"][k] = i_s
        cols["v"][k] = state.v
        cols["i_t"][k] = state.i_t
        cols["u_m"][k] = u.u_m
        cols["u_r"][k] = u.u_r
        H[k] = hamiltonian(params, state)
        tilde = to_tilde(params, ssmap, state, theta0[k])
        H_tilde[k] = shifted_energy(params, evaluator, tilde)
        S_vals[k] = potential(evaluator, tilde.theta_dq)
        err_omega[k] = np.linalg.norm(state.omega - spec.omega0)
        err_ir[k] = np.linalg.norm(i_r - spec.i_r_star)
        final_state = state
    return Trajectory(
        params=params,
        omega0=spec.omega0,
        i_r_star=np.asarray(spec.i_r_star, float).ravel(),
        t=times.copy(),
        omega=cols["omega"],
        theta=cols["theta"],
        i_r=cols["i_r"],
        i_s=cols["i_s"],
        v=cols["v"],
        i_t=cols["i_t"],
        u_m=cols["u_m"],
        u_r=cols["u_r"],
        H=H,
        H_tilde=H_tilde,
        S=S_vals,
        err_omega=err_omega,
        err_ir=err_ir,
        theta0=theta0,
        final_state=final_state,
        backend=backend_name,
    )
