"""Open-loop vector field, its port-Hamiltonian realization and the passive output.

The canonical stacked coordinates are x = (M omega, theta, lam_r, lam_s,
C v, L_t i_t); the co-energy gradient in these coordinates is
(omega, tau_e, i_r, i_s, v, i_t). State derivatives are returned in the
same coordinates as State (angular acceleration, not momentum rate).
"""

from dataclasses import dataclass

import numpy as np

from .model import State, co_energy, currents_from_fluxes, electrical_torque


@dataclass(frozen=True)
class PHRealization:
    """Constant (J, R, B) with J skew, R symmetric PSD, B the input routing."""

    J: np.ndarray
    R: np.ndarray
    B: np.ndarray


def build_ph_realization(params) -> PHRealization:
    """Constant interconnection/damping/input matrices for the stacked system.

    Row blocks: momenta (n), angles (n), rotor fluxes (n), stator fluxes (2n),
    charges (2n), line flux linkages (2m).
    """
    n, m = params.n, params.m
    N = 7 * n + 2 * m
    sl_p = slice(0, n)
    sl_th = slice(n, 2 * n)
    sl_lr = slice(2 * n, 3 * n)
    sl_ls = slice(3 * n, 5 * n)
    sl_q = slice(5 * n, 7 * n)
    sl_ph = slice(7 * n, N)

    J = np.zeros((N, N))
    J[sl_p, sl_th] = -np.eye(n)
    J[sl_th, sl_p] = np.eye(n)
    J[sl_ls, sl_q] = np.eye(2 * n)
    J[sl_q, sl_ls] = -np.eye(2 * n)
    E2n = params.E_blk()
    J[sl_q, sl_ph] = -E2n
    J[sl_ph, sl_q] = E2n.T

    R = np.zeros((N, N))
    R[sl_p, sl_p] = np.diag(params.D_r)
    R[sl_lr, sl_lr] = np.diag(params.R_r)
    R[sl_ls, sl_ls] = params.R_s_blk()
    R[sl_q, sl_q] = params.G_blk()
    R[sl_ph, sl_ph] = params.R_t_blk()

    B = np.zeros((N, 2 * n))
    B[sl_p, :n] = np.eye(n)
    B[sl_lr, n:] = np.eye(n)
    return PHRealization(J=J, R=R, B=B)


def rhs_open_loop(params, state, u) -> State:
    """Componentwise open-loop dynamics; returns derivatives in State coordinates."""
    i_s, i_r = currents_from_fluxes(params, state.theta, state.lam_s, state.lam_r)
    tau = electrical_torque(params, state.theta, i_r, i_s)
    E2n = params.E_blk()
    d_omega = (-params.D_r * state.omega - tau + u.u_m) / params.M_r
    d_theta = state.omega.copy()
    d_lam_r = -params.R_r * i_r + u.u_r
    d_lam_s = -np.repeat(params.R_s, 2) * i_s + state.v
    d_v = (-np.repeat(params.G, 2) * state.v - E2n @ state.i_t - i_s) / np.repeat(params.C, 2)
    d_i_t = (-np.repeat(params.R_t, 2) * state.i_t + E2n.T @ state.v) / np.repeat(params.L_t, 2)
    return State(omega=d_omega, theta=d_theta, lam_r=d_lam_r, lam_s=d_lam_s, v=d_v, i_t=d_i_t)


def canonical_rhs(params, state, deriv) -> np.ndarray:
    """Derivative of the canonical stacked coordinates from a State derivative."""
    return np.concatenate(
        [
            params.M_r * deriv.omega,
            deriv.theta,
            deriv.lam_r,
            deriv.lam_s,
            np.repeat(params.C, 2) * deriv.v,
            np.repeat(params.L_t, 2) * deriv.i_t,
        ]
    )


def passive_output(params, state):
    """Collocated passive output y = (omega, i_r)."""
    _, i_r = currents_from_fluxes(params, state.theta, state.lam_s, state.lam_r)
    return state.omega.copy(), i_r


def dissipation_rate(params, state) -> float:
    """Instantaneous dissipation grad(H)^T R grad(H) >= 0."""
    ph = build_ph_realization(params)
    g = co_energy(params, state).pack()
    return float(g @ ph.R @ g)


def hamiltonian_rate(params, state, u) -> float:
    """Chain-rule dH/dt = y^T u - grad(H)^T R grad(H)."""
    ce = co_energy(params, state)
    y_u = float(np.dot(ce.omega, u.u_m) + np.dot(ce.i_r, u.u_r))
    return y_u - dissipation_rate(params, state)
