"""Impedance constructors, the regulator map Pi and the steady network flow.

On the velocity/rotor-current target set the electrical subsystem is a
linear circuit driven by a rotating stator EMF. Pi maps that EMF to the
steady phasor currents/voltages; Y_net is the equivalent admittance seen by
the EMF sources; K_net projects it onto the torque balance.
"""

from dataclasses import dataclass, field

import numpy as np

from .algebra import kron_j, rotation_block


@dataclass(frozen=True)
class ImpedanceSet:
    """Stator impedance, bus admittance, line impedance and the line Laplacian."""

    Z_s: np.ndarray
    Y_c: np.ndarray
    Z_t: np.ndarray
    L_t_lap: np.ndarray


@dataclass(frozen=True)
class SteadyStateMap:
    """Regulator solution Pi with the derived admittance and references."""

    pi: np.ndarray
    y_net: np.ndarray
    omega0: float
    i_r_star: np.ndarray
    impedances: ImpedanceSet
    sylvester_residual: float
    spectral_abscissa: float
    pi_s: np.ndarray = field(init=False)

    def __post_init__(self):
        n = self.y_net.shape[0] // 2
        object.__setattr__(self, "pi_s", self.pi[: 2 * n, :])


def build_impedances(params, omega0: float) -> ImpedanceSet:
    """Phasor-structured impedance/admittance matrices at frequency omega0."""
    if omega0 <= 0.0:
        raise ValueError("omega0 must be positive")
    rank = np.linalg.matrix_rank(params.E) if params.E.size else 0
    if rank != params.n - 1:
        raise ValueError("transmission graph must be connected (rank(E) = n-1)")
    n, m = params.n, params.m
    Z_s = params.R_s_blk() + omega0 * kron_j(n) @ params.L_s_blk()
    Y_c = params.G_blk() + omega0 * kron_j(n) @ params.C_blk()
    if m > 0:
        Z_t = params.R_t_blk() + omega0 * kron_j(m) @ params.L_t_blk()
        E2n = params.E_blk()
        L_t_lap = E2n @ np.linalg.solve(Z_t, E2n.T)
    else:
        Z_t = np.zeros((0, 0))
        L_t_lap = np.zeros((2 * n, 2 * n))
    return ImpedanceSet(Z_s=Z_s, Y_c=Y_c, Z_t=Z_t, L_t_lap=L_t_lap)


def assemble_driven_system(params, omega0: float):
    """Exosystem/driven-form matrices (S, Q, A, P) of the electrical subsystem.

    State ordering z = (i_s, v, i_t); Q z' = -A z + P xi_s with the EMF
    rotating as xi_s' = S xi_s.
    """
    n, m = params.n, params.m
    S = omega0 * kron_j(n)
    Q = np.zeros((4 * n + 2 * m, 4 * n + 2 * m))
    Q[: 2 * n, : 2 * n] = params.L_s_blk()
    Q[2 * n : 4 * n, 2 * n : 4 * n] = params.C_blk()
    Q[4 * n :, 4 * n :] = params.L_t_blk()
    A = np.zeros_like(Q)
    A[: 2 * n, : 2 * n] = params.R_s_blk()
    A[: 2 * n, 2 * n : 4 * n] = -np.eye(2 * n)
    A[2 * n : 4 * n, : 2 * n] = np.eye(2 * n)
    A[2 * n : 4 * n, 2 * n : 4 * n] = params.G_blk()
    E2n = params.E_blk()
    A[2 * n : 4 * n, 4 * n :] = E2n
    A[4 * n :, 2 * n : 4 * n] = -E2n.T
    A[4 * n :, 4 * n :] = params.R_t_blk()
    P = np.zeros((4 * n + 2 * m, 2 * n))
    P[: 2 * n, :] = -np.eye(2 * n)
    return S, Q, A, P


def solve_pi(params, omega0: float, i_r_star) -> SteadyStateMap:
    """Solve the regulator equation Q Pi S = -A Pi + P by direct linear solve."""
    i_r_star = np.asarray(i_r_star, dtype=float).ravel()
    imp = build_impedances(params, omega0)
    S, Q, A, P = assemble_driven_system(params, omega0)
    n, m = params.n, params.m
    lhs = A + omega0 * kron_j(2 * n + m) @ Q
    try:
        pi = np.linalg.solve(lhs, P)
    except np.linalg.LinAlgError as exc:
        cond = np.linalg.cond(lhs)
        raise RuntimeError(f"regulator system singular (cond={cond:.3e})") from exc
    residual = np.linalg.norm(Q @ pi @ S + A @ pi - P, "fro")
    p_norm = np.linalg.norm(P, "fro")
    if residual > 1e-8 * p_norm:
        cond = np.linalg.cond(lhs)
        raise RuntimeError(
            f"regulator residual {residual:.3e} exceeds 1e-8*|P| (cond={cond:.3e})"
        )
    eigs = np.linalg.eigvals(-np.linalg.solve(Q, A))
    abscissa = float(np.max(eigs.real))
    if abscissa >= 0.0:
        raise RuntimeError(f"driven electrical subsystem not Hurwitz (abscissa={abscissa:.3e})")
    y_net = np.linalg.inv(imp.Z_s + np.linalg.inv(imp.Y_c + imp.L_t_lap))
    return SteadyStateMap(
        pi=pi,
        y_net=y_net,
        omega0=omega0,
        i_r_star=i_r_star,
        impedances=imp,
        sylvester_residual=float(residual),
        spectral_abscissa=abscissa,
    )


def pi_closed_form(params, omega0: float) -> np.ndarray:
    """Stacked closed form of Pi from the impedance blocks (cross-check route)."""
    imp = build_impedances(params, omega0)
    shunt = np.linalg.inv(imp.Y_c + imp.L_t_lap)
    y_net = np.linalg.inv(imp.Z_s + shunt)
    top = -y_net
    mid = shunt @ y_net
    if params.m > 0:
        bot = np.linalg.solve(imp.Z_t, params.E_blk().T @ shunt @ y_net)
    else:
        bot = np.zeros((0, 2 * params.n))
    return np.vstack([top, mid, bot])


def emf_phasor(params, omega0: float, i_r_star, theta) -> np.ndarray:
    """Rotating stator EMF R_theta (L_m (x) e2) i_r* omega0 at angles theta."""
    theta = np.asarray(theta, dtype=float).ravel()
    i_r_star = np.asarray(i_r_star, dtype=float).ravel()
    amp = params.L_m * i_r_star * omega0
    out = np.empty(2 * params.n)
    out[0::2] = -np.sin(theta) * amp
    out[1::2] = np.cos(theta) * amp
    return out


def network_flow(ssmap, params, theta):
    """Steady phasor state (i_s, v, i_t) on the target set at angles theta."""
    xi = emf_phasor(params, ssmap.omega0, ssmap.i_r_star, theta)
    flow = ssmap.pi @ xi
    n = params.n
    return flow[: 2 * n], flow[2 * n : 4 * n], flow[4 * n :]


def k_net(ssmap, params, theta) -> np.ndarray:
    """Equivalent admittance projected through the rotor angles onto the torque balance."""
    theta = np.asarray(theta, dtype=float).ravel()
    R = rotation_block(theta)
    coupling = R @ params.L_m_e2()
    Ir = np.diag(ssmap.i_r_star)
    return Ir @ coupling.T @ ssmap.y_net @ coupling @ Ir


def steady_state_torque(ssmap, params, theta) -> np.ndarray:
    """Steady electrical torque K_net(theta) omega0 1."""
    return k_net(ssmap, params, theta) @ (ssmap.omega0 * np.ones(params.n))


def t12_matrix(params, ssmap, theta_dq) -> np.ndarray:
    """Velocity/electrical cross-damping block of the shifted-energy decay form.

    Built from the impedance blocks (not from the solved Pi); returns the
    n x (4n+2m) block coupling the velocity errors to the electrical errors.
    """
    imp = ssmap.impedances
    n, m = params.n, params.m
    omega0 = ssmap.omega0
    R = rotation_block(np.asarray(theta_dq, dtype=float).ravel())
    src = R @ params.L_m_e2() @ np.diag(ssmap.i_r_star)
    shunt = np.linalg.inv(imp.Y_c + imp.L_t_lap)
    y_src = ssmap.y_net @ src
    top = -omega0 * kron_j(n) @ params.L_s_blk() @ y_src
    mid = omega0 * kron_j(n) @ params.C_blk() @ shunt @ y_src
    if m > 0:
        bot = omega0 * kron_j(m) @ params.L_t_blk() @ np.linalg.solve(imp.Z_t, params.E_blk().T @ shunt @ y_src)
    else:
        bot = np.zeros((0, n))
    return 0.5 * np.vstack([top, mid, bot]).T
