"""Pure-numpy integration backend; same call surface as the compiled core.

Selected automatically when the compiled extension is unavailable. The
compiled core is preferred for long horizons (it is two to three orders of
magnitude faster on the per-step loop).
"""

import numpy as np

BACKEND_NAME = "python"

STATUS_OK = 0
STATUS_NONFINITE = 1
STATUS_DT_UNDERFLOW = 2

# Dormand-Prince 5(4) tableau
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)


class _Model:
    """Precomputed views of the packed kernel inputs."""

    def __init__(self, kind, M, D, L_r, R_r, L_m, L_s, R_s, C, G, L_t, R_t, E,
                 omega0, i_r_star, pi_s, ns, kd, u_const):
        self.kind = int(kind)
        self.n = M.shape[0]
        self.m = L_t.shape[0]
        self.M, self.D = M, D
        self.L_r, self.R_r, self.L_m, self.L_s, self.R_s = L_r, R_r, L_m, L_s, R_s
        self.C, self.G, self.L_t, self.R_t = C, G, L_t, R_t
        self.E2 = np.kron(E, np.eye(2))
        self.omega0 = float(omega0)
        self.irs = i_r_star
        self.pi_s, self.ns, self.kd = pi_s, ns, kd
        self.u_const = u_const
        self.Ls2 = np.repeat(L_s, 2)
        self.Rs2 = np.repeat(R_s, 2)
        self.C2 = np.repeat(C, 2)
        self.G2 = np.repeat(G, 2)
        self.Lt2 = np.repeat(L_t, 2)
        self.Rt2 = np.repeat(R_t, 2)
        self.schur = L_r - L_m**2 / L_s

    def rhs(self, x):
        n, m = self.n, self.m
        omega = x[:n]
        theta = x[n : 2 * n]
        lam_r = x[2 * n : 3 * n]
        lam_s = x[3 * n : 5 * n]
        v = x[5 * n : 7 * n]
        i_t = x[7 * n : 7 * n + 2 * m]
        c, s = np.cos(theta), np.sin(theta)

        proj = c * lam_s[0::2] + s * lam_s[1::2]
        i_r = (lam_r - self.L_m / self.L_s * proj) / self.schur
        i_s = np.empty(2 * n)
        i_s[0::2] = (lam_s[0::2] - self.L_m * i_r * c) / self.L_s
        i_s[1::2] = (lam_s[1::2] - self.L_m * i_r * s) / self.L_s

        u_m, u_r = self._control(x, omega, c, s, i_s, i_r, v)

        dx = np.empty_like(x)
        quad = -s * i_s[0::2] + c * i_s[1::2]
        tau = -i_r * self.L_m * quad
        dx[:n] = (-self.D * omega - tau + u_m) / self.M
        dx[n : 2 * n] = omega
        dx[2 * n : 3 * n] = -self.R_r * i_r + u_r
        dx[3 * n : 5 * n] = -self.Rs2 * i_s + v
        dx[5 * n : 7 * n] = (-self.G2 * v - self.E2 @ i_t - i_s) / self.C2
        dx[7 * n : 7 * n + 2 * m] = (-self.Rt2 * i_t + self.E2.T @ v) / self.Lt2
        dx[-1] = self.omega0
        return dx

    def _control(self, x, omega, c, s, i_s, i_r, v):
        n = self.n
        kind = self.kind
        if kind == 0:
            return self.u_const[:n], self.u_const[n:]
        if kind == 1:
            za = -self.R_s * i_s[0::2] + self.omega0 * self.L_s * i_s[1::2] + v[0::2]
            zb = -self.R_s * i_s[1::2] - self.omega0 * self.L_s * i_s[0::2] + v[1::2]
            u_r = self.R_r * self.irs + self.L_m * (c * za + s * zb) / self.L_s
            u_m = self.D * self.omega0 - self.irs * self.L_m * (-s * i_s[0::2] + c * i_s[1::2])
            return u_m, u_r

        amp = self.L_m * self.irs * self.omega0
        a = np.empty(2 * n)
        a[0::2] = -s * amp
        a[1::2] = c * amp
        ishat = self.pi_s @ a
        if kind == 2:
            b = np.empty(2 * n)
            b[0::2] = c * amp
            b[1::2] = s * amp
            w2 = self.ns @ b
            grad = self.omega0 * self.irs * self.L_m * (-s * w2[0::2] + c * w2[1::2])
            u_m = self.D * self.omega0 - self.irs * self.L_m * (-s * ishat[0::2] + c * ishat[1::2]) - grad
        else:
            kda = self.kd @ a
            active = self.irs * self.L_m * (-s * kda[0::2] + c * kda[1::2])
            ea = i_s[0::2] - ishat[0::2]
            eb = i_s[1::2] - ishat[1::2]
            u_m = self.D * self.omega0 + active - self.irs * self.L_m * (-s * ea + c * eb)

        di_r = -(self.R_r / self.L_r) * (i_r - self.irs)
        xs_a = self.L_m * (-s * omega * i_r + c * di_r)
        xs_b = self.L_m * (c * omega * i_r + s * di_r)
        dis_a = (-self.R_s * i_s[0::2] + v[0::2] - xs_a) / self.L_s
        dis_b = (-self.R_s * i_s[1::2] + v[1::2] - xs_b) / self.L_s
        xi_r = self.L_m * (omega * (-s * i_s[0::2] + c * i_s[1::2]) + c * dis_a + s * dis_b)
        u_r = self.R_r * self.irs + xi_r
        return u_m, u_r


def run_fixed_rk4(kind, x0, dt, n_steps, stride,
                  M, D, L_r, R_r, L_m, L_s, R_s, C, G, L_t, R_t, E,
                  omega0, i_r_star, pi_s, ns, kd, u_const,
                  out_times, out_states):
    """Classic RK4 with fixed step; records every `stride` steps plus the end.

    Returns (status, n_records, t_fail).
    """
    model = _Model(kind, M, D, L_r, R_r, L_m, L_s, R_s, C, G, L_t, R_t, E,
                   omega0, i_r_star, pi_s, ns, kd, u_const)
    x = np.array(x0, dtype=float)
    comp = np.zeros_like(x)  # compensated-summation carry
    rec = 0
    out_times[rec] = 0.0
    out_states[rec] = x
    rec += 1
    for step in range(1, n_steps + 1):
        k1 = model.rhs(x)
        k2 = model.rhs(x + 0.5 * dt * k1)
        k3 = model.rhs(x + 0.5 * dt * k2)
        k4 = model.rhs(x + dt * k3)
        incr = (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        y = incr - comp
        snew = x + y
        comp = (snew - x) - y
        x = snew
        if step % stride == 0 or step == n_steps:
            t = step * dt
            if not np.all(np.isfinite(x)):
                return STATUS_NONFINITE, rec, t
            out_times[rec] = t
            out_states[rec] = x
            rec += 1
    return STATUS_OK, rec, 0.0


def run_adaptive(kind, x0, t_end, rtol, atol, dt_min, dt_max, record_every,
                 M, D, L_r, R_r, L_m, L_s, R_s, C, G, L_t, R_t, E,
                 omega0, i_r_star, pi_s, ns, kd, u_const,
                 out_times, out_states):
    """Dormand-Prince 5(4) with PI-free step control; records on a fixed cadence.

    Steps are clipped to land exactly on record times, so recorded output is
    deterministic. Returns (status, n_records, t_fail).
    """
    model = _Model(kind, M, D, L_r, R_r, L_m, L_s, R_s, C, G, L_t, R_t, E,
                   omega0, i_r_star, pi_s, ns, kd, u_const)
    x = np.array(x0, dtype=float)
    comp = np.zeros_like(x)  # compensated-summation carry
    t = 0.0
    rec = 0
    out_times[rec] = 0.0
    out_states[rec] = x
    rec += 1
    next_record = min(record_every, t_end)
    dt = min(dt_max, max(dt_min, record_every / 16.0))
    k = [np.empty_like(x) for _ in range(7)]
    k[0] = model.rhs(x)
    while t < t_end - 1e-15 * (1.0 + t_end):
        h = min(dt, next_record - t)
        for stage in range(1, 7):
            xs = x.copy()
            for j, a in enumerate(_DP_A[stage]):
                xs += h * a * k[j]
            k[stage] = model.rhs(xs)
        x5 = x.copy()
        for j in range(7):
            if _DP_B5[j]:
                x5 += h * _DP_B5[j] * k[j]
        err_vec = np.zeros_like(x)
        for j in range(7):
            diff = _DP_B5[j] - _DP_B4[j]
            if diff:
                err_vec += diff * k[j]
        err_vec *= h
        scale = atol + rtol * np.maximum(np.abs(x), np.abs(x5))
        err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))
        factor = 0.9 * err ** -0.2 if err > 0.0 else 5.0
        proposal = h * min(5.0, max(0.2, factor))
        if err <= 1.0:
            t += h
            incr = np.zeros_like(x)
            for j in range(7):
                if _DP_B5[j]:
                    incr += _DP_B5[j] * k[j]
            incr *= h
            y = incr - comp
            snew = x + y
            comp = (snew - x) - y
            x = snew
            k[0] = k[6]  # FSAL
            if t >= next_record - 1e-12 * max(1.0, next_record):
                t = next_record
                if not np.all(np.isfinite(x)):
                    return STATUS_NONFINITE, rec, t
                out_times[rec] = t
                out_states[rec] = x
                rec += 1
                next_record = min(next_record + record_every, t_end)
            # clipping a step onto a record time must not shrink the controller
            dt = max(dt, proposal) if h < dt else proposal
        else:
            dt = proposal
        dt = min(dt, dt_max)
        if dt < dt_min:
            return STATUS_DT_UNDERFLOW, rec, t
    return STATUS_OK, rec, 0.0
