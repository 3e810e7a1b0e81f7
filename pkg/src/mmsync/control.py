"""Feedback laws for multi-machine synchronization.

All controllers are full-information pure state feedbacks. The two
synchronizing controllers regulate the rotor currents by feedback
linearization and shape the torque balance either through the steady flow
plus the potential gradient (energy form) or through a stator-current
error injection on top of the steady dissipation term (high-gain form).
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .algebra import rotation_block
from .model import ControlInput, currents_from_fluxes, rotor_emf, stator_emf
from .potential import grad_potential
from .steady_state import k_net, network_flow, t12_matrix

CONTROLLER_KINDS = (
    "open_loop_constant",
    "omega_invariance",
    "steady_state",
    "mmsf_energy",
    "mmsf_highgain",
)


@dataclass
class ControllerSpec:
    """Controller selection plus the common references (omega0, i_r*)."""

    kind: str
    omega0: float
    i_r_star: np.ndarray
    theta_dq: Optional[np.ndarray] = None
    u_m_const: Optional[np.ndarray] = None
    u_r_const: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in CONTROLLER_KINDS:
            raise ValueError(f"unknown controller kind {self.kind!r}")
        if self.omega0 <= 0.0:
            raise ValueError("omega0 must be positive")
        self.i_r_star = np.asarray(self.i_r_star, dtype=float).ravel()
        if np.any(self.i_r_star <= 0.0):
            raise ValueError("i_r_star must be entrywise positive")
        if self.theta_dq is not None:
            self.theta_dq = np.asarray(self.theta_dq, dtype=float).ravel()
        if self.u_m_const is not None:
            self.u_m_const = np.asarray(self.u_m_const, dtype=float).ravel()
        if self.u_r_const is not None:
            self.u_r_const = np.asarray(self.u_r_const, dtype=float).ravel()

    def to_dict(self):
        d = {"kind": self.kind, "omega0": self.omega0, "i_r_star": self.i_r_star.tolist()}
        if self.theta_dq is not None:
            d["theta_dq"] = self.theta_dq.tolist()
        if self.u_m_const is not None:
            d["u_m"] = self.u_m_const.tolist()
        if self.u_r_const is not None:
            d["u_r"] = self.u_r_const.tolist()
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(
            kind=d["kind"],
            omega0=d["omega0"],
            i_r_star=d["i_r_star"],
            theta_dq=d.get("theta_dq"),
            u_m_const=d.get("u_m"),
            u_r_const=d.get("u_r"),
        )


def ir_star_for_emf(params, omega0: float, e0: float) -> np.ndarray:
    """Rotor-current references giving every machine the EMF amplitude e0."""
    return e0 / (omega0 * params.L_m)


def u_omega(params, state, spec) -> ControlInput:
    """Feedback holding the velocities at omega0 and the rotor currents at i_r*."""
    i_s, _ = currents_from_fluxes(params, state.theta, state.lam_s, state.lam_r)
    theta = state.theta
    c, s = np.cos(theta), np.sin(theta)
    omega0 = spec.omega0
    # (-Z_s i_s + v) / L_s per machine, with Z_s = R_s + j omega0 L_s
    za = -params.R_s * i_s[0::2] + omega0 * params.L_s * i_s[1::2] + state.v[0::2]
    zb = -params.R_s * i_s[1::2] - omega0 * params.L_s * i_s[0::2] + state.v[1::2]
    xi_r = params.L_m * (c * za + s * zb) / params.L_s
    u_r = params.R_r * spec.i_r_star + xi_r
    quad = -s * i_s[0::2] + c * i_s[1::2]
    u_m = params.D_r * omega0 - spec.i_r_star * params.L_m * quad
    return ControlInput(u_m=u_m, u_r=u_r)


def u_star(ssmap, params, theta_dq, spec) -> ControlInput:
    """Constant input sustaining the steady flow through theta_dq."""
    omega0 = ssmap.omega0
    u_r = params.R_r * ssmap.i_r_star
    u_m = (np.diag(params.D_r) + k_net(ssmap, params, theta_dq)) @ (omega0 * np.ones(params.n))
    return ControlInput(u_m=u_m, u_r=u_r)


def _xi_r_feedback_linearization(params, state, spec, i_s, i_r):
    """Rotor EMF consistent with the decoupled rotor-current target dynamics.

    The target closed loop L_r di_r/dt = -R_r (i_r - i_r*) prescribes
    di_r/dt; chaining through the stator EMF and the stator flux equation
    yields di_s/dt and finally the rotor EMF, with no algebraic loop.
    """
    di_r_dt = -(params.R_r / params.L_r) * (i_r - spec.i_r_star)
    xi_s = stator_emf(params, state.theta, state.omega, i_r, di_r_dt)
    dlam_s_dt = -np.repeat(params.R_s, 2) * i_s + state.v
    di_s_dt = (dlam_s_dt - xi_s) / np.repeat(params.L_s, 2)
    return rotor_emf(params, state.theta, state.omega, i_s, di_s_dt)


def u_mmsf_energy(params, ssmap, evaluator, state, spec) -> ControlInput:
    """Energy-based synchronizing feedback: steady-flow torque plus the
    potential gradient on the mechanical side, feedback-linearized rotor
    currents on the excitation side."""
    i_s, i_r = currents_from_fluxes(params, state.theta, state.lam_s, state.lam_r)
    theta = state.theta
    c, s = np.cos(theta), np.sin(theta)
    i_s_hat, _, _ = network_flow(ssmap, params, theta)
    quad_hat = -s * i_s_hat[0::2] + c * i_s_hat[1::2]
    grad = grad_potential(evaluator, theta)
    u_m = params.D_r * spec.omega0 - spec.i_r_star * params.L_m * quad_hat - grad
    u_r = params.R_r * spec.i_r_star + _xi_r_feedback_linearization(params, state, spec, i_s, i_r)
    return ControlInput(u_m=u_m, u_r=u_r)


def u_mmsf_highgain(params, ssmap, state, spec) -> ControlInput:
    """High-gain synchronizing feedback: steady dissipation torque plus a
    stator-current error injection; same excitation law as the energy form."""
    i_s, i_r = currents_from_fluxes(params, state.theta, state.lam_s, state.lam_r)
    theta = state.theta
    c, s = np.cos(theta), np.sin(theta)
    R = rotation_block(theta)
    loss = np.concatenate([np.repeat(params.R_s, 2), np.repeat(params.G, 2), np.repeat(params.R_t, 2)])
    kd = ssmap.pi.T @ (loss[:, None] * ssmap.pi)
    src = kd @ (R @ params.L_m_e2() @ ssmap.i_r_star * spec.omega0)
    active = spec.i_r_star * params.L_m * (-s * src[0::2] + c * src[1::2])
    i_s_hat, _, _ = network_flow(ssmap, params, theta)
    err = i_s - i_s_hat
    s_m = -spec.i_r_star * params.L_m * (-s * err[0::2] + c * err[1::2])
    u_m = params.D_r * spec.omega0 + active + s_m
    u_r = params.R_r * spec.i_r_star + _xi_r_feedback_linearization(params, state, spec, i_s, i_r)
    return ControlInput(u_m=u_m, u_r=u_r)


@dataclass
class DissipationReport:
    """Sampled certificate for the damping dominance condition."""

    worst_margin: float
    worst_theta: np.ndarray
    passed: bool
    margins: np.ndarray
    equivalence_max_diff: float


def check_dissipation(params, ssmap, theta_samples) -> DissipationReport:
    """Evaluate the damping dominance condition over angle samples.

    Two independent routes are compared at every sample: the quadratic
    form through Pi, and the Schur complement of the cross-damping block;
    their minimum eigenvalues must agree. Failure of the condition itself
    is reported, not raised.
    """
    theta_samples = np.atleast_2d(np.asarray(theta_samples, dtype=float))
    n, m = params.n, params.m
    omega0 = ssmap.omega0
    D = np.diag(params.D_r)
    q_sq_over_k = np.concatenate(
        [
            np.repeat(params.L_s**2 / params.R_s, 2),
            np.repeat(params.C**2 / params.G, 2),
            np.repeat(params.L_t**2 / params.R_t, 2),
        ]
    )
    loss_inv = np.concatenate(
        [
            np.repeat(1.0 / params.R_s, 2),
            np.repeat(1.0 / params.G, 2),
            np.repeat(1.0 / params.R_t, 2),
        ]
    )
    margins = np.empty(theta_samples.shape[0])
    max_diff = 0.0
    for k, theta in enumerate(theta_samples):
        R = rotation_block(theta)
        X = ssmap.pi @ R @ params.L_m_e2() @ np.diag(ssmap.i_r_star)
        direct = D - 0.25 * omega0**2 * X.T @ (q_sq_over_k[:, None] * X)
        m_direct = float(np.linalg.eigvalsh(0.5 * (direct + direct.T)).min())
        T12 = t12_matrix(params, ssmap, theta)
        schur = D - T12 @ (loss_inv[:, None] * T12.T)
        m_schur = float(np.linalg.eigvalsh(0.5 * (schur + schur.T)).min())
        diff = abs(m_direct - m_schur)
        scale = 1.0 + max(abs(m_direct), abs(m_schur))
        if diff > 1e-10 * scale:
            raise RuntimeError(
                f"dissipation-condition routes disagree at sample {k}: {m_direct} vs {m_schur}"
            )
        max_diff = max(max_diff, diff / scale)
        margins[k] = m_direct
    worst = int(np.argmin(margins))
    return DissipationReport(
        worst_margin=float(margins[worst]),
        worst_theta=theta_samples[worst].copy(),
        passed=bool(margins[worst] > 0.0),
        margins=margins,
        equivalence_max_diff=max_diff,
    )
