"""Network potential over the rotor angles, its gradient and minimization.

The potential is the stored inductor energy minus the stored capacitor
energy evaluated on the steady network flow. It is constant along the
diagonal fiber theta -> theta + s*1, so minimization is done with the
first angle pinned to zero.
"""

from dataclasses import dataclass, field

import numpy as np

from .algebra import rotation_block
from .steady_state import emf_phasor, network_flow


@dataclass(frozen=True)
class PotentialEvaluator:
    """Caches the constant quadratic kernels of the potential and of the
    steady dissipation, both projected through Pi."""

    params: object
    ssmap: object
    ns_matrix: np.ndarray = field(init=False)
    kd_matrix: np.ndarray = field(init=False)

    def __post_init__(self):
        p = self.params
        n, m = p.n, p.m
        storage = np.zeros((4 * n + 2 * m, 4 * n + 2 * m))
        storage[: 2 * n, : 2 * n] = p.L_s_blk()
        storage[2 * n : 4 * n, 2 * n : 4 * n] = -p.C_blk()
        storage[4 * n :, 4 * n :] = p.L_t_blk()
        loss = np.zeros_like(storage)
        loss[: 2 * n, : 2 * n] = p.R_s_blk()
        loss[2 * n : 4 * n, 2 * n : 4 * n] = p.G_blk()
        loss[4 * n :, 4 * n :] = p.R_t_blk()
        ns = self.ssmap.pi.T @ storage @ self.ssmap.pi
        kd = self.ssmap.pi.T @ loss @ self.ssmap.pi
        object.__setattr__(self, "ns_matrix", 0.5 * (ns + ns.T))
        object.__setattr__(self, "kd_matrix", 0.5 * (kd + kd.T))


@dataclass
class CriticalPoint:
    theta: np.ndarray
    value: float
    grad_norm: float
    classification: str
    converged: bool
    iterations: int


@dataclass
class MinimizeOptions:
    step: float = 1e-2
    tol: float = None
    max_iter: int = 20000
    fd_step: float = 1e-5


def potential_terms(evaluator, theta):
    """Decomposition (stator inductor, capacitor, line inductor); each term >= 0
    and the potential equals term1 - term2 + term3."""
    p = evaluator.params
    i_s, v, i_t = network_flow(evaluator.ssmap, p, theta)
    return (
        0.5 * np.dot(i_s, np.repeat(p.L_s, 2) * i_s),
        0.5 * np.dot(v, np.repeat(p.C, 2) * v),
        0.5 * np.dot(i_t, np.repeat(p.L_t, 2) * i_t),
    )


def potential(evaluator, theta) -> float:
    """Inductor-minus-capacitor energy on the steady flow at angles theta."""
    ind_s, cap, ind_t = potential_terms(evaluator, theta)
    return ind_s - cap + ind_t


def potential_quadratic(evaluator, theta) -> float:
    """Same potential through the cached quadratic kernel (dual formula)."""
    ss = evaluator.ssmap
    xi = emf_phasor(evaluator.params, ss.omega0, ss.i_r_star, theta)
    return 0.5 * float(xi @ evaluator.ns_matrix @ xi)


def grad_potential(evaluator, theta) -> np.ndarray:
    """Closed-form gradient of the potential; sums to zero by construction."""
    p = evaluator.params
    ss = evaluator.ssmap
    theta = np.asarray(theta, dtype=float).ravel()
    R = rotation_block(theta)
    Ir = np.diag(ss.i_r_star)
    left = Ir @ p.L_m_e2().T @ R.T
    right = R @ p.L_m_e1() @ ss.i_r_star
    return ss.omega0**2 * (left @ evaluator.ns_matrix @ right)


def grad_norm_scale(evaluator) -> float:
    """Default gradient tolerance scale: omega0 times the largest K_net entry."""
    from .steady_state import k_net

    kn = k_net(evaluator.ssmap, evaluator.params, np.zeros(evaluator.params.n))
    return evaluator.ssmap.omega0 * float(np.max(np.abs(kn)))


def projected_hessian_eigs(evaluator, theta, fd_step=1e-5):
    """Eigenvalues of the finite-difference Hessian restricted to sum-zero directions."""
    theta = np.asarray(theta, dtype=float).ravel()
    n = theta.shape[0]
    H = np.zeros((n, n))
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = fd_step
        gp = grad_potential(evaluator, theta + ei)
        gm = grad_potential(evaluator, theta - ei)
        H[:, i] = (gp - gm) / (2.0 * fd_step)
    H = 0.5 * (H + H.T)
    # orthonormal basis of the hyperplane orthogonal to the all-ones direction
    basis = np.linalg.qr(np.eye(n) - np.ones((n, n)) / n)[0][:, : n - 1]
    return np.linalg.eigvalsh(basis.T @ H @ basis)


def classify_critical_point(evaluator, theta, fd_step=1e-5, rel_tol=1e-6) -> str:
    """Label a critical point (min / saddle / max / degenerate) from the
    projected Hessian spectrum."""
    eigs = projected_hessian_eigs(evaluator, theta, fd_step)
    scale = float(np.max(np.abs(eigs))) if eigs.size else 0.0
    if scale == 0.0:
        return "degenerate"
    thresh = rel_tol * scale
    n_pos = int(np.sum(eigs > thresh))
    n_neg = int(np.sum(eigs < -thresh))
    n_zero = eigs.size - n_pos - n_neg
    if n_zero > 0:
        return "degenerate"
    if n_neg == 0:
        return "min"
    if n_pos == 0:
        return "max"
    return "saddle"


def minimize(evaluator, theta0, opts: MinimizeOptions = None) -> CriticalPoint:
    """Gradient descent on the fiber quotient with backtracking line search.

    The first angle is pinned to zero (gauge fixing); since the gradient
    sums to zero this descends the full potential. Non-convergence is
    reported, not raised.
    """
    opts = opts or MinimizeOptions()
    tol = opts.tol if opts.tol is not None else 1e-8 * grad_norm_scale(evaluator)
    theta = np.asarray(theta0, dtype=float).ravel().copy()
    theta = theta - theta[0]  # pin the gauge
    value = potential(evaluator, theta)
    grad = grad_potential(evaluator, theta)
    gnorm = float(np.linalg.norm(grad))
    it = 0
    step = opts.step
    while it < opts.max_iter and gnorm > tol:
        direction = -grad / gnorm
        direction[0] = 0.0
        # backtrack on the value; once improvements fall below the floating
        # resolution of the potential, fall back to gradient-norm descent
        accepted = False
        trial_step = step
        while trial_step > 1e-16:
            cand = theta + trial_step * direction
            cand_value = potential(evaluator, cand)
            if cand_value < value:
                accepted = True
                break
            trial_step *= 0.5
        if not accepted:
            trial_step = step
            while trial_step > 1e-16:
                cand = theta + trial_step * direction
                cand_grad = grad_potential(evaluator, cand)
                cand_gnorm = float(np.linalg.norm(cand_grad))
                if cand_gnorm < gnorm:
                    theta, value = cand, potential(evaluator, cand)
                    grad, gnorm = cand_grad, cand_gnorm
                    accepted = True
                    break
                trial_step *= 0.5
            if not accepted:
                break
            step = max(trial_step, 1e-12)
            it += 1
            continue
        theta, value = cand, cand_value
        grad = grad_potential(evaluator, theta)
        gnorm = float(np.linalg.norm(grad))
        if trial_step == step:
            step = min(step * 2.0, 1.0)
        else:
            step = max(trial_step, 1e-12)
        it += 1
    return CriticalPoint(
        theta=theta,
        value=value,
        grad_norm=gnorm,
        classification=classify_critical_point(evaluator, theta, opts.fd_step),
        converged=gnorm <= tol,
        iterations=it,
    )


def scan_torus(evaluator, resolution: int):
    """Dense potential grid over the gauge-fixed slice [-pi, pi)^(n-1).

    Returns (axis, values) with values in row-major order; values.shape is
    (resolution,) * (n-1). Guarded to n <= 3 machines.
    """
    n = evaluator.params.n
    if resolution <= 1:
        raise ValueError("resolution must be > 1")
    if n > 3:
        raise ValueError("full torus scans are limited to n <= 3 machines")
    axis = -np.pi + 2.0 * np.pi * np.arange(resolution) / resolution
    shape = (resolution,) * (n - 1)
    values = np.empty(shape)
    theta = np.zeros(n)
    for idx in np.ndindex(shape):
        for k, i in enumerate(idx):
            theta[k + 1] = axis[i]
        values[idx] = potential(evaluator, theta)
    return axis, values


def scan_rows(axis, values):
    """Flatten a scan into row-major (theta_2, ..., theta_n, S) rows."""
    shape = values.shape
    rows = []
    for idx in np.ndindex(shape):
        rows.append([axis[i] for i in idx] + [values[idx]])
    return rows
