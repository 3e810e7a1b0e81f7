"""Acceptance gate: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s`. The long closed-loop
scenarios need the compiled kernel; building the package (pip install -e .)
provides it.
"""

import json
import time

import numpy as np
import pytest

from conftest import CONFIG_DIR, IRS3, OMEGA0, state_with_currents

from mmsync import _kernel
from mmsync.algebra import wrap_angle
from mmsync.analysis import (
    TildeState,
    boundedness_probe,
    from_tilde,
    rhs_tilde,
    tilde_derivative_from_full,
    to_tilde,
)
from mmsync.control import ControllerSpec, check_dissipation, u_mmsf_energy
from mmsync.dynamics import (
    build_ph_realization,
    canonical_rhs,
    hamiltonian_rate,
    rhs_open_loop,
)
from mmsync.model import (
    ControlInput,
    State,
    co_energy,
    currents_from_fluxes,
    electrical_torque,
    fluxes_from_currents,
    magnetic_energy,
)
from mmsync.potential import (
    PotentialEvaluator,
    grad_potential,
    minimize,
    potential,
    scan_torus,
)
from mmsync.sim import IntegratorConfig, build_initial_state, simulate
from mmsync.steady_state import (
    assemble_driven_system,
    k_net,
    pi_closed_form,
    solve_pi,
)

NEEDS_KERNEL = pytest.mark.skipif(
    "compiled" not in _kernel.available_backends(),
    reason="long-horizon acceptance runs need the compiled kernel",
)


def _load_scenario(name):
    from mmsync.cli import load_config

    return load_config(name)


def _run_scenario(name):
    cfg = _load_scenario(name)
    ssmap = solve_pi(cfg.params, cfg.controller.omega0, cfg.controller.i_r_star)
    evaluator = PotentialEvaluator(cfg.params, ssmap)
    init = dict(cfg.initial)
    kind = init.pop("kind")
    x0 = build_initial_state(cfg.params, ssmap, kind, **init)
    t0 = time.perf_counter()
    traj = simulate(cfg.params, cfg.controller, x0, cfg.integrator, ssmap=ssmap, evaluator=evaluator)
    wall = time.perf_counter() - t0
    return cfg, traj, wall


@pytest.fixture(scope="module")
def scenario_zero():
    return _run_scenario("ieee_like_3machine")


@pytest.fixture(scope="module")
def scenario_near_steady():
    return _run_scenario("ieee_like_3machine_near_steady")


def test_a1_regulator_map(params3):
    t0 = time.perf_counter()
    ssmap = solve_pi(params3, OMEGA0, IRS3)
    closed = pi_closed_form(params3, OMEGA0)
    elapsed = time.perf_counter() - t0
    p_norm = np.sqrt(2.0 * params3.n)  # |P|_F for the unit stator injection
    residual = ssmap.sylvester_residual
    agreement = np.linalg.norm(closed - ssmap.pi) / np.linalg.norm(ssmap.pi)
    assert residual <= 1e-8 * p_norm
    assert agreement <= 1e-8
    assert elapsed < 1.0
    print(f"A1 PASS regulator map: residual={residual:.2e}, dual-route agreement={agreement:.2e}, "
          f"runtime={elapsed * 1e3:.1f} ms")


def test_a2_gradient_correctness(evaluator3):
    rng = np.random.default_rng(101)
    h = 1e-6
    worst_fd = 0.0
    for _ in range(100):
        theta = rng.uniform(-np.pi, np.pi, 3)
        g = grad_potential(evaluator3, theta)
        fd = np.empty(3)
        for k in range(3):
            e = np.zeros(3)
            e[k] = h
            fd[k] = (potential(evaluator3, theta + e) - potential(evaluator3, theta - e)) / (2 * h)
        worst_fd = max(worst_fd, np.linalg.norm(fd - g) / (1 + np.linalg.norm(g)))
    assert worst_fd <= 1e-5
    worst_sum = 0.0
    for _ in range(1000):
        g = grad_potential(evaluator3, rng.uniform(-np.pi, np.pi, 3))
        worst_sum = max(worst_sum, abs(g.sum()) / (1 + np.linalg.norm(g)))
    assert worst_sum <= 1e-10
    print(f"A2 PASS gradient: fd-mismatch={worst_fd:.2e} (tol 1e-5), zero-sum={worst_sum:.2e} (tol 1e-10)")


def test_a3_fiber_invariance(params3, ssmap3, evaluator3):
    rng = np.random.default_rng(102)
    worst_s = 0.0
    worst_k = 0.0
    for _ in range(100):
        theta = rng.uniform(-np.pi, np.pi, 3)
        s = rng.uniform(-7, 7)
        s_val = potential(evaluator3, theta)
        worst_s = max(worst_s, abs(potential(evaluator3, theta + s) - s_val) / (1 + abs(s_val)))
        k1 = k_net(ssmap3, params3, theta)
        k2 = k_net(ssmap3, params3, theta + s)
        worst_k = max(worst_k, np.abs(k1 - k2).max() / (1 + np.abs(k1).max()))
    assert worst_s <= 1e-9
    assert worst_k <= 1e-10
    print(f"A3 PASS fiber invariance: S drift={worst_s:.2e} (tol 1e-9), K_net drift={worst_k:.2e} (tol 1e-10)")


def test_a4_port_hamiltonian_equivalence(params3):
    ph = build_ph_realization(params3)
    skew = np.abs(ph.J + ph.J.T).max()
    r_min = np.linalg.eigvalsh(0.5 * (ph.R + ph.R.T)).min()
    assert skew == 0.0
    assert r_min >= -1e-12
    rng = np.random.default_rng(103)
    worst = 0.0
    for _ in range(100):
        st = state_with_currents(params3, rng)
        u = ControlInput(u_m=rng.normal(0, 1e6, 3), u_r=rng.normal(0, 1e3, 3))
        d = rhs_open_loop(params3, st, u)
        lhs = canonical_rhs(params3, st, d)
        rhs = (ph.J - ph.R) @ co_energy(params3, st).pack() + ph.B @ u.pack()
        worst = max(worst, np.linalg.norm(lhs - rhs) / (1 + np.linalg.norm(rhs)))
    assert worst <= 1e-12
    print(f"A4 PASS port-Hamiltonian form: J skew={skew:.1e}, min eig R={r_min:.1e}, "
          f"rhs mismatch={worst:.2e} (tol 1e-12)")


@NEEDS_KERNEL
def test_a5_passivity(params3, ssmap3, evaluator3):
    rng = np.random.default_rng(104)
    spec = ControllerSpec(
        kind="open_loop_constant", omega0=OMEGA0, i_r_star=IRS3,
        u_m_const=rng.normal(0, 1e5, 3), u_r_const=rng.normal(0, 1e3, 3),
    )
    cfg = IntegratorConfig(method="rk4_fixed", dt=2e-6, t_end=1.0, record_every=1e-3)
    traj = simulate(params3, spec, State.zero(params3), cfg, ssmap=ssmap3, evaluator=evaluator3)
    u = ControlInput(spec.u_m_const, spec.u_r_const)
    worst = -np.inf
    for k in range(traj.t.shape[0]):
        lam_s, lam_r = fluxes_from_currents(params3, traj.theta[k], traj.i_s[k], traj.i_r[k])
        st = State(traj.omega[k], traj.theta[k], lam_r, lam_s, traj.v[k], traj.i_t[k])
        g = co_energy(params3, st).pack()
        supplied = float(np.dot(st.omega, u.u_m) + np.dot(traj.i_r[k], u.u_r))
        margin = (hamiltonian_rate(params3, st, u) - supplied) - 1e-9 * (1.0 + float(g @ g))
        worst = max(worst, margin)
        assert margin <= 0.0
    print(f"A5 PASS passivity: worst (dH/dt - y^T u) - slack = {worst:.3e} <= 0 over {traj.t.shape[0]} records")


@NEEDS_KERNEL
def test_a6_omega_invariance(params3, ssmap3, evaluator3):
    rng = np.random.default_rng(105)
    theta = rng.uniform(-np.pi, np.pi, 3)
    i_s = rng.normal(0, 2e3, 6)
    lam_s, lam_r = fluxes_from_currents(params3, theta, i_s, IRS3)
    x0 = State(
        omega=np.full(3, OMEGA0), theta=theta, lam_r=lam_r, lam_s=lam_s,
        v=rng.normal(0, 2e3, 6), i_t=rng.normal(0, 2e3, 6),
    )
    spec = ControllerSpec(kind="omega_invariance", omega0=OMEGA0, i_r_star=IRS3)
    cfg = IntegratorConfig(method="rk4_fixed", dt=2e-6, t_end=1.0, record_every=1e-3)
    t0 = time.perf_counter()
    traj = simulate(params3, spec, x0, cfg, ssmap=ssmap3, evaluator=evaluator3)
    wall = time.perf_counter() - t0
    drift_omega = traj.err_omega.max()
    drift_ir = traj.err_ir.max()
    assert drift_omega <= 1e-6
    assert drift_ir <= 1e-6
    assert wall < 60.0
    print(f"A6 PASS invariant-set feedback: max |omega-ref|={drift_omega:.2e}, "
          f"max |i_r-ref|={drift_ir:.2e} (tol 1e-6), runtime={wall:.1f} s")


def test_a7_zero_dynamics_convergence(params3):
    S, Q, A, P = assemble_driven_system(params3, OMEGA0)
    M = -np.linalg.solve(Q, A)
    # slowest electrical time constant across all windings and buses
    tau_elems = np.concatenate(
        [params3.L_r / params3.R_r, params3.L_s / params3.R_s, params3.C / params3.G,
         params3.L_t / params3.R_t]
    )
    budget = 10.0 * tau_elems.max()
    horizon = min(1.0, budget)
    dt = 2e-6
    # one-step RK4 propagator of the linear transient system
    phi = np.eye(M.shape[0])
    term = np.eye(M.shape[0])
    for k in range(1, 5):
        term = term @ (dt * M) / k
        phi = phi + term
    stride = 500
    sample_phi = np.linalg.matrix_power(phi, stride)
    n_samples = int(round(horizon / (stride * dt)))
    rng = np.random.default_rng(106)
    z = rng.normal(0, 1.0, M.shape[0])
    z0_norm = np.linalg.norm(z)
    v_prev = 0.5 * z @ Q @ z
    v0 = v_prev
    monotone = True
    for _ in range(n_samples):
        z = sample_phi @ z
        v = 0.5 * z @ Q @ z
        if v_prev > 1e-12 * v0 and v >= v_prev:
            monotone = False
        v_prev = v
    ratio = np.linalg.norm(z) / z0_norm
    assert monotone
    assert ratio <= 1e-9
    assert horizon <= budget
    print(f"A7 PASS zero-dynamics: |z~({horizon:.1f} s)|/|z~(0)|={ratio:.2e} (tol 1e-9, "
          f"budget {budget:.1f} s), V monotone decreasing")


@NEEDS_KERNEL
def test_a8_rotor_current_rates(params3, ssmap3, evaluator3, spec3):
    rng = np.random.default_rng(107)
    x0 = build_initial_state(params3, ssmap3, "on_gamma", theta_dq=np.zeros(3))
    i_r0 = IRS3 * rng.uniform(0.5, 1.5, 3)
    i_s0, _ = currents_from_fluxes(params3, x0.theta, x0.lam_s, x0.lam_r)
    lam_s, lam_r = fluxes_from_currents(params3, x0.theta, i_s0, i_r0)
    x0.lam_s, x0.lam_r = lam_s, lam_r
    cfg = IntegratorConfig(method="rk4_fixed", dt=2e-6, t_end=6.0, record_every=1e-3)
    traj = simulate(params3, spec3, x0, cfg, ssmap=ssmap3, evaluator=evaluator3)
    rates = params3.R_r / params3.L_r
    fitted = np.empty(3)
    for i in range(3):
        err = np.abs(traj.i_r[:, i] - IRS3[i])
        # fit across one decade of decay
        lo, hi = 0.95 * err[0], 0.095 * err[0]
        mask = (err <= lo) & (err >= hi)
        fitted[i] = -np.polyfit(traj.t[mask], np.log(err[mask]), 1)[0]
        assert abs(fitted[i] - rates[i]) <= 0.02 * rates[i]
    print(f"A8 PASS rotor decoupling: fitted rates {np.round(fitted, 4)} vs R_r/L_r "
          f"{np.round(rates, 4)} (tol 2%)")


def test_a9_tilde_cross_check(params3, ssmap3, evaluator3, spec3):
    rng = np.random.default_rng(108)
    worst = 0.0
    for _ in range(100):
        tilde = TildeState(
            theta_dq=rng.uniform(-np.pi, np.pi, 3),
            omega_tilde=rng.normal(0, 5.0, 3),
            i_s_tilde=rng.normal(0, 2e3, 6),
            v_tilde=rng.normal(0, 2e3, 6),
            i_t_tilde=rng.normal(0, 1e3, 6),
            theta0=rng.uniform(-np.pi, np.pi),
        )
        omega, theta, i_s, v, i_t = from_tilde(params3, ssmap3, tilde)
        lam_s, lam_r = fluxes_from_currents(params3, theta, i_s, IRS3)
        st = State(omega, theta, lam_r, lam_s, v, i_t)
        u = u_mmsf_energy(params3, ssmap3, evaluator3, st, spec3)
        deriv = rhs_open_loop(params3, st, u)
        lhs = tilde_derivative_from_full(params3, ssmap3, st, deriv, tilde.theta0)
        rhs = rhs_tilde(params3, ssmap3, evaluator3, tilde)
        worst = max(worst, np.linalg.norm(lhs.pack() - rhs.pack()) / (1 + np.linalg.norm(rhs.pack())))
    assert worst <= 1e-8
    print(f"A9 PASS tilde cross-check: worst mismatch={worst:.2e} (tol 1e-8) over 100 states")


def _check_scenario(tag, cfg, traj, wall):
    omega0 = cfg.controller.omega0
    irs = cfg.controller.i_r_star
    err_omega = np.abs(traj.omega[-1] - omega0).max() / omega0
    err_ir = (np.abs(traj.i_r[-1] - irs) / irs).max()
    pairwise = np.abs(traj.pairwise_angle_diffs()[-1]).max()
    probe = boundedness_probe(traj)
    budget = 600.0 * cfg.integrator.t_end / 20.0
    assert err_omega <= 1e-3, f"{tag}: omega error {err_omega}"
    assert err_ir <= 1e-3, f"{tag}: rotor current error {err_ir}"
    assert pairwise <= 1e-2, f"{tag}: pairwise angles {pairwise}"
    assert not probe.any_growth, f"{tag}: growth flags {probe.growth_flags}"
    assert wall <= budget, f"{tag}: runtime {wall:.0f} s over budget {budget:.0f} s"
    return err_omega, err_ir, pairwise, wall


@NEEDS_KERNEL
def test_a10_three_machine_reproduction(scenario_zero, scenario_near_steady):
    z = _check_scenario("zero-start", *scenario_zero)
    n = _check_scenario("near-steady", *scenario_near_steady)
    print(f"A10 PASS zero-start: |omega err|={z[0]:.2e}, |i_r err|={z[1]:.2e}, "
          f"pairwise angles={z[2]:.2e} rad, wall={z[3]:.0f} s")
    print(f"A10 PASS near-steady: |omega err|={n[0]:.2e}, |i_r err|={n[1]:.2e}, "
          f"pairwise angles={n[2]:.2e} rad, wall={n[3]:.0f} s")


def _assert_h_tilde_monotone(tag, cfg, traj):
    lock_level = 1e-3 * np.linalg.norm(cfg.controller.i_r_star)
    below = traj.err_ir < lock_level
    assert below.any(), f"{tag}: rotor currents never locked"
    lock = int(np.argmax(below))
    ht = traj.H_tilde[lock:]
    slack = 1e-6 * abs(ht[0])
    increases = np.diff(ht)
    worst = increases.max()
    ok = bool(np.all(increases <= slack))
    verdict = "PASS" if ok else "FAIL"
    print(f"A11 {verdict} {tag}: lock at t={traj.t[lock]:.3f} s, worst step increase "
          f"{worst:.3e} vs slack {slack:.3e}")
    assert ok, f"{tag}: H~ rose by {worst} (slack {slack})"


@NEEDS_KERNEL
def test_a11_shifted_energy_decrease_zero_start(scenario_zero):
    _assert_h_tilde_monotone("zero-start", scenario_zero[0], scenario_zero[1])


@NEEDS_KERNEL
def test_a11_shifted_energy_decrease_near_steady(scenario_near_steady):
    # The damping-dominance condition does not hold for this parameter set
    # (see the A12 margin report); this scenario starts with regulated rotor
    # currents, so the early electrical transient falls inside the checked
    # window and briefly drives the shifted energy up by ~1e-5 of its value.
    # The criterion is asserted as stated and is expected to fail on it.
    _assert_h_tilde_monotone("near-steady", scenario_near_steady[0], scenario_near_steady[1])


def test_a12_dissipation_condition(params3, ssmap3):
    rng = np.random.default_rng(109)
    samples = rng.uniform(-np.pi, np.pi, (100, 3))
    report = check_dissipation(params3, ssmap3, samples)
    assert report.equivalence_max_diff <= 1e-10
    print(f"A12 PASS dissipation routes agree: max diff={report.equivalence_max_diff:.2e} "
          f"(tol 1e-10); margin report: worst={report.worst_margin:.4e} at "
          f"theta={np.round(report.worst_theta, 3)}, satisfied={report.passed}")


def test_a13_potential_landscape(evaluator3, evaluator2):
    rng = np.random.default_rng(110)
    worst_pairwise = 0.0
    for _ in range(20):
        theta0 = np.concatenate([[0.0], rng.uniform(-np.pi, np.pi, 2)])
        cp = minimize(evaluator3, theta0)
        assert cp.converged
        diffs = [wrap_angle(cp.theta[i] - cp.theta[j]) for i in range(3) for j in range(i + 1, 3)]
        worst_pairwise = max(worst_pairwise, np.abs(diffs).max())
    assert worst_pairwise <= 1e-2
    axis, vals = scan_torus(evaluator2, 360)
    argmin = axis[int(np.argmin(vals))]
    cell = 2 * np.pi / 360
    assert abs(argmin) <= cell
    print(f"A13 PASS landscape: 20-restart worst pairwise angle={worst_pairwise:.2e} rad "
          f"(tol 1e-2); 2-machine grid minimum at {argmin:.4f} rad (synchronized diagonal)")


def test_a14_torque_gradient_identity(params3):
    rng = np.random.default_rng(111)
    h = 1e-6
    worst = 0.0
    for _ in range(100):
        theta = rng.uniform(-np.pi, np.pi, 3)
        lam_s = rng.normal(0, 50, 6)
        lam_r = rng.normal(0, 1000, 3)
        i_s, i_r = currents_from_fluxes(params3, theta, lam_s, lam_r)
        tau = electrical_torque(params3, theta, i_r, i_s)
        fd = np.empty(3)
        for k in range(3):
            e = np.zeros(3)
            e[k] = h
            fd[k] = (
                magnetic_energy(params3, theta + e, lam_s, lam_r)
                - magnetic_energy(params3, theta - e, lam_s, lam_r)
            ) / (2 * h)
        worst = max(worst, np.linalg.norm(fd - tau) / (1 + np.linalg.norm(tau)))
    assert worst <= 1e-5
    print(f"A14 PASS torque-gradient identity: worst mismatch={worst:.2e} (tol 1e-5)")
