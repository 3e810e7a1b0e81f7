"""Validation machinery: rotating error coordinates, shifted energy and
zero-dynamics diagnostics.

The rotating-frame transformation subtracts the steady network flow at the
instantaneous angles and rotates the electrical errors back by the
auxiliary angle; the closed synchronizing loop restricted to regulated
rotor currents becomes an autonomous system in these coordinates.
"""

from dataclasses import dataclass

import numpy as np

from .algebra import kron_j
from .model import currents_from_fluxes, machine_inductance
from .potential import grad_potential, potential
from .steady_state import assemble_driven_system, network_flow, t12_matrix


@dataclass
class TildeState:
    """Rotating-frame errors (theta_dq, omega_tilde, i_s_tilde, v_tilde,
    i_t_tilde) plus the auxiliary angle theta0. Also used as the
    derivative container."""

    theta_dq: np.ndarray
    omega_tilde: np.ndarray
    i_s_tilde: np.ndarray
    v_tilde: np.ndarray
    i_t_tilde: np.ndarray
    theta0: float

    def pack(self):
        return np.concatenate(
            [self.theta_dq, self.omega_tilde, self.i_s_tilde, self.v_tilde, self.i_t_tilde, [self.theta0]]
        )


def _rotate_blocks(vec, angle, inverse=False):
    """Apply I_k (x) R_angle (or its transpose) to a stacked 2k-vector."""
    vec = np.asarray(vec, dtype=float).ravel()
    c, s = np.cos(angle), np.sin(angle)
    if inverse:
        s = -s
    out = np.empty_like(vec)
    out[0::2] = c * vec[0::2] - s * vec[1::2]
    out[1::2] = s * vec[0::2] + c * vec[1::2]
    return out


def to_tilde(params, ssmap, state, theta0: float) -> TildeState:
    """Rotating-frame error coordinates of a full state."""
    i_s, _ = currents_from_fluxes(params, state.theta, state.lam_s, state.lam_r)
    i_s_hat, v_hat, i_t_hat = network_flow(ssmap, params, state.theta)
    return TildeState(
        theta_dq=state.theta - theta0,
        omega_tilde=state.omega - ssmap.omega0,
        i_s_tilde=_rotate_blocks(i_s - i_s_hat, theta0, inverse=True),
        v_tilde=_rotate_blocks(state.v - v_hat, theta0, inverse=True),
        i_t_tilde=_rotate_blocks(state.i_t - i_t_hat, theta0, inverse=True),
        theta0=theta0,
    )


def from_tilde(params, ssmap, tilde):
    """Invert the transformation; returns (omega, theta, i_s, v, i_t)."""
    theta = tilde.theta_dq + tilde.theta0
    omega = tilde.omega_tilde + ssmap.omega0
    i_s_hat, v_hat, i_t_hat = network_flow(ssmap, params, theta)
    i_s = _rotate_blocks(tilde.i_s_tilde, tilde.theta0) + i_s_hat
    v = _rotate_blocks(tilde.v_tilde, tilde.theta0) + v_hat
    i_t = _rotate_blocks(tilde.i_t_tilde, tilde.theta0) + i_t_hat
    return omega, theta, i_s, v, i_t


def shifted_energy(params, evaluator, tilde) -> float:
    """Quadratic error energy plus the network potential at theta_dq."""
    quad = 0.5 * (
        np.dot(tilde.omega_tilde, params.M_r * tilde.omega_tilde)
        + np.dot(tilde.i_s_tilde, np.repeat(params.L_s, 2) * tilde.i_s_tilde)
        + np.dot(tilde.v_tilde, np.repeat(params.C, 2) * tilde.v_tilde)
        + np.dot(tilde.i_t_tilde, np.repeat(params.L_t, 2) * tilde.i_t_tilde)
    )
    return quad + potential(evaluator, tilde.theta_dq)


def hdot_quadratic_form(params, ssmap, theta_dq, tilde) -> float:
    """Decay rate of the shifted energy: minus the damped quadratic form with
    the velocity/electrical cross block."""
    T12 = t12_matrix(params, ssmap, theta_dq)
    zeta_e = np.concatenate([tilde.i_s_tilde, tilde.v_tilde, tilde.i_t_tilde])
    loss = np.concatenate(
        [np.repeat(params.R_s, 2), np.repeat(params.G, 2), np.repeat(params.R_t, 2)]
    )
    w = tilde.omega_tilde
    return -float(np.dot(w, params.D_r * w) + 2.0 * np.dot(w, T12 @ zeta_e) + np.dot(zeta_e, loss * zeta_e))


def rhs_tilde(params, ssmap, evaluator, tilde) -> TildeState:
    """Closed-loop vector field in rotating error coordinates (rotor currents
    regulated); includes the velocity-coupling terms through the equivalent
    admittance."""
    imp = ssmap.impedances
    n, m = params.n, params.m
    omega0 = ssmap.omega0
    theta_dq = tilde.theta_dq
    c, s = np.cos(theta_dq), np.sin(theta_dq)
    w = tilde.omega_tilde

    # velocity-error source R_{theta_dq} (L_m (x) e2) I_r* omega_tilde
    amp = params.L_m * ssmap.i_r_star * w
    w_src = np.empty(2 * n)
    w_src[0::2] = -s * amp
    w_src[1::2] = c * amp
    y_src = ssmap.y_net @ w_src
    shunt = np.linalg.solve(imp.Y_c + imp.L_t_lap, y_src)

    d_theta_dq = w.copy()
    torque_err = ssmap.i_r_star * params.L_m * (-s * tilde.i_s_tilde[0::2] + c * tilde.i_s_tilde[1::2])
    d_omega = (-params.D_r * w + torque_err - grad_potential(evaluator, theta_dq)) / params.M_r

    jn = kron_j(n)
    ls = np.repeat(params.L_s, 2)
    rhs_is = -imp.Z_s @ tilde.i_s_tilde + tilde.v_tilde - w_src + omega0 * (jn @ (ls * y_src))
    d_is = rhs_is / ls

    E2n = params.E_blk()
    cs = np.repeat(params.C, 2)
    rhs_v = -imp.Y_c @ tilde.v_tilde - tilde.i_s_tilde - E2n @ tilde.i_t_tilde - omega0 * (jn @ (cs * shunt))
    d_v = rhs_v / cs

    if m > 0:
        lt = np.repeat(params.L_t, 2)
        line_src = np.linalg.solve(imp.Z_t, E2n.T @ shunt)
        rhs_it = -imp.Z_t @ tilde.i_t_tilde + E2n.T @ tilde.v_tilde - omega0 * (kron_j(m) @ (lt * line_src))
        d_it = rhs_it / lt
    else:
        d_it = np.zeros(0)

    return TildeState(
        theta_dq=d_theta_dq,
        omega_tilde=d_omega,
        i_s_tilde=d_is,
        v_tilde=d_v,
        i_t_tilde=d_it,
        theta0=omega0,
    )


def currents_rate(params, theta, omega, i_s, i_r, dlam_s, dlam_r):
    """Time derivative of the winding currents from flux derivatives,
    accounting for the rotating inductance coupling."""
    n = params.n
    c, s = np.cos(theta), np.sin(theta)
    quad = params.L_m * omega * i_r
    coupling_rate = np.zeros(3 * n)
    coupling_rate[0 : 2 * n : 2] = -s * quad
    coupling_rate[1 : 2 * n : 2] = c * quad
    coupling_rate[2 * n :] = params.L_m * omega * (-s * i_s[0::2] + c * i_s[1::2])
    rhs = np.concatenate([dlam_s, dlam_r]) - coupling_rate
    sol = np.linalg.solve(machine_inductance(params, theta), rhs)
    return sol[: 2 * n], sol[2 * n :]


def tilde_derivative_from_full(params, ssmap, state, deriv, theta0: float) -> TildeState:
    """Push a full-state derivative through the differential of the
    rotating-frame transformation (analytic chain rule)."""
    omega0 = ssmap.omega0
    i_s, i_r = currents_from_fluxes(params, state.theta, state.lam_s, state.lam_r)
    di_s, _ = currents_rate(params, state.theta, state.omega, i_s, i_r, deriv.lam_s, deriv.lam_r)

    i_s_hat, v_hat, i_t_hat = network_flow(ssmap, params, state.theta)
    c, s = np.cos(state.theta), np.sin(state.theta)
    amp = params.L_m * ssmap.i_r_star * omega0 * deriv.theta
    d_xi = np.empty(2 * params.n)
    d_xi[0::2] = -c * amp
    d_xi[1::2] = -s * amp
    d_flow = ssmap.pi @ d_xi
    n = params.n
    d_is_hat, d_v_hat, d_it_hat = d_flow[: 2 * n], d_flow[2 * n : 4 * n], d_flow[4 * n :]

    def tilde_rate(err, d_err):
        rotated = _rotate_blocks(err, theta0, inverse=True)
        spun = np.empty_like(rotated)
        spun[0::2] = omega0 * rotated[1::2]
        spun[1::2] = -omega0 * rotated[0::2]
        return spun + _rotate_blocks(d_err, theta0, inverse=True)

    return TildeState(
        theta_dq=deriv.theta - omega0,
        omega_tilde=deriv.omega.copy(),
        i_s_tilde=tilde_rate(i_s - i_s_hat, di_s - d_is_hat),
        v_tilde=tilde_rate(state.v - v_hat, deriv.v - d_v_hat),
        i_t_tilde=tilde_rate(state.i_t - i_t_hat, deriv.i_t - d_it_hat),
        theta0=omega0,
    )


def rhs_zero_dynamics(params, ssmap, xi_s, z):
    """Exosystem/driven form of the electrical subsystem on the target set."""
    S, Q, A, P = assemble_driven_system(params, ssmap.omega0)
    xi_s = np.asarray(xi_s, dtype=float).ravel()
    z = np.asarray(z, dtype=float).ravel()
    d_xi = S @ xi_s
    d_z = np.linalg.solve(Q, -A @ z + P @ xi_s)
    return d_xi, d_z


@dataclass
class BoundednessReport:
    """Max norms per monitored quantity with an end-of-run growth flag."""

    max_norms: dict
    growth_flags: dict
    any_growth: bool


def boundedness_probe(trajectory, growth_margin=1e-6) -> BoundednessReport:
    """Report max norms of the monitored quantities over a completed run and
    flag any that peak in the final decile (growth trend).

    A quantity is flagged when its last-decile max exceeds the max over the
    first nine deciles by more than the relative margin; genuine divergence
    grows by orders of magnitude, converged oscillations stay below it."""
    p = trajectory.params
    psi = np.empty_like(trajectory.i_s)
    c = np.cos(trajectory.theta)
    s = np.sin(trajectory.theta)
    psi[:, 0::2] = p.L_m * c * trajectory.i_r
    psi[:, 1::2] = p.L_m * s * trajectory.i_r
    lam_s = np.repeat(p.L_s, 2) * trajectory.i_s + psi
    series = {
        "omega": np.linalg.norm(trajectory.omega, axis=1),
        "i_r": np.linalg.norm(trajectory.i_r, axis=1),
        "psi": np.linalg.norm(psi, axis=1),
        "lam_s": np.linalg.norm(lam_s, axis=1),
        "v": np.linalg.norm(trajectory.v, axis=1),
        "i_t": np.linalg.norm(trajectory.i_t, axis=1) if trajectory.i_t.shape[1] else np.zeros(len(trajectory.t)),
    }
    max_norms, growth = {}, {}
    for name, values in series.items():
        max_norms[name] = float(values.max(initial=0.0))
        split = max(1, int(0.9 * values.shape[0]))
        head_max = float(values[:split].max(initial=0.0))
        tail_max = float(values[split:].max(initial=0.0))
        growth[name] = tail_max > head_max * (1.0 + growth_margin) + 1e-300
    return BoundednessReport(max_norms=max_norms, growth_flags=growth, any_growth=any(growth.values()))
