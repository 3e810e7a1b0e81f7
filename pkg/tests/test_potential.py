import numpy as np
import pytest

from conftest import IRS2, OMEGA0

from mmsync.model import SystemParams
from mmsync.potential import (
    MinimizeOptions,
    PotentialEvaluator,
    classify_critical_point,
    grad_potential,
    minimize,
    potential,
    potential_quadratic,
    potential_terms,
    projected_hessian_eigs,
    scan_rows,
    scan_torus,
)
from mmsync.steady_state import solve_pi


def symmetric_two_machine():
    return SystemParams(
        M_r=[22000.0, 22000.0], D_r=[4000.0, 4000.0], L_r=[1.2, 1.2], R_r=[1.68, 1.68],
        L_m=[0.04, 0.04], L_s=[0.0018, 0.0018], R_s=[0.166, 0.166],
        C=[1e-5, 1e-5], G=[0.8, 0.8], L_t=[0.0047], R_t=[0.165], E=[[-1], [1]],
    )


def two_machine_ring():
    return SystemParams(
        M_r=[22000.0, 10000.0], D_r=[4000.0, 1500.0], L_r=[1.2, 7.0], R_r=[1.68, 4.2],
        L_m=[0.04, 0.08], L_s=[0.0018, 0.001], R_s=[0.166, 0.07],
        C=[1e-5, 2e-4], G=[0.8, 0.4], L_t=[0.0047, 0.0038], R_t=[0.165, 0.166],
        E=[[-1, -1], [1, 1]],
    )


def test_zero_reference_gives_zero_potential(params3):
    ss0 = solve_pi(params3, OMEGA0, np.zeros(3))
    ev0 = PotentialEvaluator(params3, ss0)
    theta = np.array([0.4, -1.2, 2.2])
    assert potential(ev0, theta) == 0.0
    assert np.abs(grad_potential(ev0, theta)).max() == 0.0


def test_cached_kernels_symmetric(evaluator3):
    assert np.abs(evaluator3.ns_matrix - evaluator3.ns_matrix.T).max() <= 1e-12
    assert np.abs(evaluator3.kd_matrix - evaluator3.kd_matrix.T).max() <= 1e-12


def test_dual_formula_agreement(evaluator3):
    rng = np.random.default_rng(50)
    for _ in range(100):
        theta = rng.uniform(-np.pi, np.pi, 3)
        s1 = potential(evaluator3, theta)
        s2 = potential_quadratic(evaluator3, theta)
        assert abs(s1 - s2) <= 1e-10 * (1 + abs(s1))


def test_fiber_invariance(evaluator3):
    rng = np.random.default_rng(51)
    for _ in range(50):
        theta = rng.uniform(-np.pi, np.pi, 3)
        s = rng.uniform(-7, 7)
        s1 = potential(evaluator3, theta)
        s2 = potential(evaluator3, theta + s)
        assert abs(s2 - s1) <= 1e-9 * (1 + abs(s1))


def test_term_decomposition_signs(evaluator3):
    rng = np.random.default_rng(52)
    for _ in range(20):
        theta = rng.uniform(-np.pi, np.pi, 3)
        ind_s, cap, ind_t = potential_terms(evaluator3, theta)
        assert ind_s >= 0.0 and cap >= 0.0 and ind_t >= 0.0
        assert abs((ind_s - cap + ind_t) - potential(evaluator3, theta)) <= 1e-12 * (1 + abs(cap))


def test_gradient_sums_to_zero(evaluator3):
    rng = np.random.default_rng(53)
    for _ in range(1000):
        theta = rng.uniform(-np.pi, np.pi, 3)
        g = grad_potential(evaluator3, theta)
        assert abs(g.sum()) <= 1e-10 * (1 + np.linalg.norm(g))


def test_gradient_matches_finite_differences(evaluator3):
    rng = np.random.default_rng(54)
    h = 1e-6
    for _ in range(100):
        theta = rng.uniform(-np.pi, np.pi, 3)
        g = grad_potential(evaluator3, theta)
        fd = np.empty(3)
        for k in range(3):
            e = np.zeros(3)
            e[k] = h
            fd[k] = (potential(evaluator3, theta + e) - potential(evaluator3, theta - e)) / (2 * h)
        assert np.linalg.norm(fd - g) <= 1e-5 * (1 + np.linalg.norm(g))


def test_minimize_returns_immediately_at_symmetric_critical_point():
    p = symmetric_two_machine()
    ss = solve_pi(p, OMEGA0, np.array([1950.0, 1950.0]))
    ev = PotentialEvaluator(p, ss)
    cp = minimize(ev, np.zeros(2))
    assert cp.converged and cp.iterations == 0
    assert cp.classification == "min"


def test_minimize_three_machine_synchronizes(evaluator3):
    rng = np.random.default_rng(55)
    for _ in range(5):
        theta0 = np.concatenate([[0.0], rng.uniform(-np.pi, np.pi, 2)])
        cp = minimize(evaluator3, theta0)
        assert cp.converged
        from mmsync.algebra import wrap_angle

        diffs = [wrap_angle(cp.theta[i] - cp.theta[j]) for i in range(3) for j in range(i + 1, 3)]
        assert np.abs(diffs).max() <= 1e-2


def test_minimize_nonconvergence_is_reported(evaluator3):
    opts = MinimizeOptions(max_iter=1, tol=1e-30)
    cp = minimize(evaluator3, np.array([0.0, 2.0, -2.0]), opts)
    assert not cp.converged


def test_ring_has_two_distinct_critical_points():
    # descent restarts reach the minimum; the antipodal point is the maximum
    # (the potential is even in the angle difference for a reciprocal network)
    p = two_machine_ring()
    ss = solve_pi(p, OMEGA0, IRS2)
    ev = PotentialEvaluator(p, ss)
    rng = np.random.default_rng(56)
    minima = set()
    for _ in range(10):
        cp = minimize(ev, np.array([0.0, rng.uniform(-np.pi, np.pi)]))
        assert cp.converged
        minima.add(round(float(cp.theta[1]), 6))
    assert minima == {0.0}
    g_min = grad_potential(ev, np.array([0.0, 0.0]))
    g_max = grad_potential(ev, np.array([0.0, np.pi]))
    scale = OMEGA0 * np.abs(ev.kd_matrix).max()
    assert np.linalg.norm(g_min) <= 1e-8 * scale
    assert np.linalg.norm(g_max) <= 1e-8 * scale
    assert classify_critical_point(ev, np.array([0.0, 0.0])) == "min"
    assert classify_critical_point(ev, np.array([0.0, np.pi])) == "max"
    # grid oracle confirms both
    axis, vals = scan_torus(ev, 360)
    assert abs(axis[int(np.argmin(vals))]) <= 2 * np.pi / 360
    assert abs(abs(axis[int(np.argmax(vals))]) - np.pi) <= 2 * np.pi / 360


def test_scan_shapes_and_guards(evaluator2, evaluator3):
    axis, vals = scan_torus(evaluator2, 36)
    assert axis.shape == (36,) and vals.shape == (36,)
    axis3, vals3 = scan_torus(evaluator3, 12)
    assert vals3.shape == (12, 12)
    assert np.all(np.isfinite(vals3))
    with pytest.raises(ValueError):
        scan_torus(evaluator2, 1)


def test_scan_rejects_large_systems():
    p = SystemParams(
        M_r=[1.0] * 4, D_r=[1.0] * 4, L_r=[1.2] * 4, R_r=[1.68] * 4, L_m=[0.04] * 4,
        L_s=[0.0018] * 4, R_s=[0.166] * 4, C=[1e-5] * 4, G=[0.8] * 4,
        L_t=[0.0047] * 3, R_t=[0.165] * 3,
        E=[[-1, 0, 0], [1, -1, 0], [0, 1, -1], [0, 0, 1]],
    )
    ss = solve_pi(p, OMEGA0, np.full(4, 1000.0))
    ev = PotentialEvaluator(p, ss)
    with pytest.raises(ValueError):
        scan_torus(ev, 16)


def test_scan_gauge_consistency(evaluator2, params2, ssmap2):
    # pinning the first angle and scanning the second is equivalent (up to
    # axis relabeling) to pinning the second and scanning the first
    axis, vals = scan_torus(evaluator2, 24)
    for i, x in enumerate(axis):
        other_gauge = potential(evaluator2, np.array([x, 0.0]))
        assert abs(other_gauge - potential(evaluator2, np.array([0.0, -x]))) <= 1e-9 * (1 + abs(other_gauge))
        assert abs(vals[i] - potential(evaluator2, np.array([0.0, x]))) == 0.0


def test_scan_rows_row_major(evaluator3):
    axis, vals = scan_torus(evaluator3, 4)
    rows = scan_rows(axis, vals)
    assert len(rows) == 16
    assert rows[0][0] == axis[0] and rows[0][1] == axis[0]
    assert rows[1][1] == axis[1] and rows[1][0] == axis[0]  # last axis fastest
    assert rows[5][2] == vals[1, 1]


def test_grid_minimum_matches_minimize(evaluator2):
    axis, vals = scan_torus(evaluator2, 360)
    k = int(np.argmin(vals))
    cp = minimize(evaluator2, np.array([0.0, axis[k]]))
    assert cp.converged
    cell = 2 * np.pi / 360
    assert abs(cp.theta[1] - axis[k]) <= cell


def test_two_machine_minimum_on_zero_fiber(evaluator2):
    # gauge-fixed slice: the synchronized diagonal passes through theta_2 = 0
    axis, vals = scan_torus(evaluator2, 360)
    k = int(np.argmin(vals))
    assert abs(axis[k]) <= 2 * np.pi / 360


def test_symmetric_machines_even_landscape():
    p = symmetric_two_machine()
    ss = solve_pi(p, OMEGA0, np.array([1950.0, 1950.0]))
    ev = PotentialEvaluator(p, ss)
    for t in np.linspace(0.1, 3.0, 8):
        a = potential(ev, np.array([0.0, t]))
        b = potential(ev, np.array([0.0, -t]))
        assert abs(a - b) <= 1e-9 * (1 + abs(a))


def test_minimizer_hessian_nonnegative(evaluator3):
    cp = minimize(evaluator3, np.array([0.0, 0.5, -0.4]))
    eigs = projected_hessian_eigs(evaluator3, cp.theta)
    assert eigs.min() >= -1e-8 * (1 + np.abs(eigs).max())
