# Compiled integration core: fixed-step RK4 and Dormand-Prince 5(4) with the
# feedback laws evaluated inline per stage. Mirrors fallback.py exactly.

import numpy as np

from libc.math cimport cos, sin, sqrt, fabs, isfinite, fmin, fmax, pow

BACKEND_NAME = "compiled"

STATUS_OK = 0
STATUS_NONFINITE = 1
STATUS_DT_UNDERFLOW = 2


cdef struct ModelDims:
    int n
    int m
    int N          # 7n + 2m + 1 (auxiliary angle appended)
    int kind


cdef void _eval_rhs(ModelDims* dm, double* x, double* dx,
                    double* M, double* D, double* L_r, double* R_r,
                    double* L_m, double* L_s, double* R_s,
                    double* C, double* G, double* L_t, double* R_t,
                    double* E, double omega0, double* irs,
                    double* pi_s, double* ns, double* kd, double* u_const,
                    double* i_s, double* i_r, double* cth, double* sth,
                    double* u_m, double* u_r, double* va, double* vb) noexcept nogil:
    cdef int n = dm.n
    cdef int m = dm.m
    cdef int i, e, j, two_n
    cdef double th, c, s, proj, lsa, lsb, lr
    cdef double za, zb, amp, acc, acc2, quad, tau
    cdef double dir_dt, xs_a, xs_b, dis_a, dis_b, xi_r, grad_i
    two_n = 2 * n

    for i in range(n):
        th = x[n + i]
        c = cos(th)
        s = sin(th)
        cth[i] = c
        sth[i] = s
        lsa = x[3 * n + 2 * i]
        lsb = x[3 * n + 2 * i + 1]
        lr = x[2 * n + i]
        proj = c * lsa + s * lsb
        i_r[i] = (lr - L_m[i] / L_s[i] * proj) / (L_r[i] - L_m[i] * L_m[i] / L_s[i])
        i_s[2 * i] = (lsa - L_m[i] * i_r[i] * c) / L_s[i]
        i_s[2 * i + 1] = (lsb - L_m[i] * i_r[i] * s) / L_s[i]

    # --- control law ---
    if dm.kind == 0:
        for i in range(n):
            u_m[i] = u_const[i]
            u_r[i] = u_const[n + i]
    elif dm.kind == 1:
        for i in range(n):
            c = cth[i]
            s = sth[i]
            za = -R_s[i] * i_s[2 * i] + omega0 * L_s[i] * i_s[2 * i + 1] + x[5 * n + 2 * i]
            zb = -R_s[i] * i_s[2 * i + 1] - omega0 * L_s[i] * i_s[2 * i] + x[5 * n + 2 * i + 1]
            u_r[i] = R_r[i] * irs[i] + L_m[i] * (c * za + s * zb) / L_s[i]
            u_m[i] = D[i] * omega0 - irs[i] * L_m[i] * (-s * i_s[2 * i] + c * i_s[2 * i + 1])
    else:
        # va <- source vector R_theta (L_m x e2) i_r* omega0
        for i in range(n):
            amp = L_m[i] * irs[i] * omega0
            va[2 * i] = -sth[i] * amp
            va[2 * i + 1] = cth[i] * amp
        # vb <- Pi_s @ va  (steady stator current at the instantaneous angles)
        for i in range(two_n):
            acc = 0.0
            for j in range(two_n):
                acc += pi_s[i * two_n + j] * va[j]
            vb[i] = acc
        if dm.kind == 2:
            for i in range(n):
                u_m[i] = D[i] * omega0 - irs[i] * L_m[i] * (
                    -sth[i] * vb[2 * i] + cth[i] * vb[2 * i + 1])
            # overwrite va with the in-phase source, vb with ns @ va
            for i in range(n):
                amp = L_m[i] * irs[i] * omega0
                va[2 * i] = cth[i] * amp
                va[2 * i + 1] = sth[i] * amp
            for i in range(two_n):
                acc = 0.0
                for j in range(two_n):
                    acc += ns[i * two_n + j] * va[j]
                vb[i] = acc
            for i in range(n):
                grad_i = omega0 * irs[i] * L_m[i] * (-sth[i] * vb[2 * i] + cth[i] * vb[2 * i + 1])
                u_m[i] = u_m[i] - grad_i
        else:
            for i in range(n):
                acc = 0.0
                acc2 = 0.0
                for j in range(two_n):
                    acc += kd[(2 * i) * two_n + j] * va[j]
                    acc2 += kd[(2 * i + 1) * two_n + j] * va[j]
                u_m[i] = D[i] * omega0 + irs[i] * L_m[i] * (-sth[i] * acc + cth[i] * acc2) \
                    - irs[i] * L_m[i] * (-sth[i] * (i_s[2 * i] - vb[2 * i])
                                         + cth[i] * (i_s[2 * i + 1] - vb[2 * i + 1]))
        for i in range(n):
            c = cth[i]
            s = sth[i]
            dir_dt = -(R_r[i] / L_r[i]) * (i_r[i] - irs[i])
            xs_a = L_m[i] * (-s * x[i] * i_r[i] + c * dir_dt)
            xs_b = L_m[i] * (c * x[i] * i_r[i] + s * dir_dt)
            dis_a = (-R_s[i] * i_s[2 * i] + x[5 * n + 2 * i] - xs_a) / L_s[i]
            dis_b = (-R_s[i] * i_s[2 * i + 1] + x[5 * n + 2 * i + 1] - xs_b) / L_s[i]
            xi_r = L_m[i] * (x[i] * (-s * i_s[2 * i] + c * i_s[2 * i + 1]) + c * dis_a + s * dis_b)
            u_r[i] = R_r[i] * irs[i] + xi_r

    # --- dynamics ---
    for i in range(n):
        c = cth[i]
        s = sth[i]
        quad = -s * i_s[2 * i] + c * i_s[2 * i + 1]
        tau = -i_r[i] * L_m[i] * quad
        dx[i] = (-D[i] * x[i] - tau + u_m[i]) / M[i]
        dx[n + i] = x[i]
        dx[2 * n + i] = -R_r[i] * i_r[i] + u_r[i]
        dx[3 * n + 2 * i] = -R_s[i] * i_s[2 * i] + x[5 * n + 2 * i]
        dx[3 * n + 2 * i + 1] = -R_s[i] * i_s[2 * i + 1] + x[5 * n + 2 * i + 1]
    for i in range(n):
        acc = 0.0
        acc2 = 0.0
        for e in range(m):
            if E[i * m + e] != 0.0:
                acc += E[i * m + e] * x[7 * n + 2 * e]
                acc2 += E[i * m + e] * x[7 * n + 2 * e + 1]
        dx[5 * n + 2 * i] = (-G[i] * x[5 * n + 2 * i] - acc - i_s[2 * i]) / C[i]
        dx[5 * n + 2 * i + 1] = (-G[i] * x[5 * n + 2 * i + 1] - acc2 - i_s[2 * i + 1]) / C[i]
    for e in range(m):
        acc = 0.0
        acc2 = 0.0
        for i in range(n):
            if E[i * m + e] != 0.0:
                acc += E[i * m + e] * x[5 * n + 2 * i]
                acc2 += E[i * m + e] * x[5 * n + 2 * i + 1]
        dx[7 * n + 2 * e] = (-R_t[e] * x[7 * n + 2 * e] + acc) / L_t[e]
        dx[7 * n + 2 * e + 1] = (-R_t[e] * x[7 * n + 2 * e + 1] + acc2) / L_t[e]
    dx[dm.N - 1] = omega0


def run_fixed_rk4(int kind, double[::1] x0, double dt, long n_steps, long stride,
                  double[::1] M, double[::1] D, double[::1] L_r, double[::1] R_r,
                  double[::1] L_m, double[::1] L_s, double[::1] R_s,
                  double[::1] C, double[::1] G, double[::1] L_t, double[::1] R_t,
                  double[:, ::1] E,
                  double omega0, double[::1] i_r_star,
                  double[:, ::1] pi_s, double[:, ::1] ns, double[:, ::1] kd,
                  double[::1] u_const,
                  double[::1] out_times, double[:, ::1] out_states):
    """Fixed-step RK4; records every `stride` steps plus the final step.

    Returns (status, n_records, t_fail).
    """
    cdef ModelDims dm
    dm.n = M.shape[0]
    dm.m = L_t.shape[0]
    dm.N = x0.shape[0]
    dm.kind = kind
    cdef int N = dm.N
    cdef long step, rec = 0
    cdef int i
    cdef double t, incr, ytmp, snew
    cdef double[::1] work = np.zeros(7 * N + 12 * dm.n, dtype=np.float64)
    cdef double* x = &work[0]
    cdef double* k1 = x + N
    cdef double* k2 = k1 + N
    cdef double* k3 = k2 + N
    cdef double* k4 = k3 + N
    cdef double* xtmp = k4 + N
    cdef double* comp = xtmp + N   # compensated-summation carry
    cdef double* i_s = comp + N
    cdef double* i_r = i_s + 2 * dm.n
    cdef double* cth = i_r + dm.n
    cdef double* sth = cth + dm.n
    cdef double* u_m = sth + dm.n
    cdef double* u_r = u_m + dm.n
    cdef double* va = u_r + dm.n
    cdef double* vb = va + 2 * dm.n

    cdef double* pM = &M[0]
    cdef double* pD = &D[0]
    cdef double* pLr = &L_r[0]
    cdef double* pRr = &R_r[0]
    cdef double* pLm = &L_m[0]
    cdef double* pLs = &L_s[0]
    cdef double* pRs = &R_s[0]
    cdef double* pC = &C[0]
    cdef double* pG = &G[0]
    cdef double* pLt = NULL
    cdef double* pRt = NULL
    cdef double* pE = NULL
    if dm.m > 0:
        pLt = &L_t[0]
        pRt = &R_t[0]
        pE = &E[0, 0]
    cdef double* pirs = &i_r_star[0]
    cdef double* ppis = &pi_s[0, 0]
    cdef double* pns = &ns[0, 0]
    cdef double* pkd = &kd[0, 0]
    cdef double* puc = &u_const[0]

    for i in range(N):
        x[i] = x0[i]
    out_times[0] = 0.0
    for i in range(N):
        out_states[0, i] = x[i]
    rec = 1
    with nogil:
        for step in range(1, n_steps + 1):
            _eval_rhs(&dm, x, k1, pM, pD, pLr, pRr, pLm, pLs, pRs, pC, pG, pLt, pRt,
                      pE, omega0, pirs, ppis, pns, pkd, puc, i_s, i_r, cth, sth, u_m, u_r, va, vb)
            for i in range(N):
                xtmp[i] = x[i] + 0.5 * dt * k1[i]
            _eval_rhs(&dm, xtmp, k2, pM, pD, pLr, pRr, pLm, pLs, pRs, pC, pG, pLt, pRt,
                      pE, omega0, pirs, ppis, pns, pkd, puc, i_s, i_r, cth, sth, u_m, u_r, va, vb)
            for i in range(N):
                xtmp[i] = x[i] + 0.5 * dt * k2[i]
            _eval_rhs(&dm, xtmp, k3, pM, pD, pLr, pRr, pLm, pLs, pRs, pC, pG, pLt, pRt,
                      pE, omega0, pirs, ppis, pns, pkd, puc, i_s, i_r, cth, sth, u_m, u_r, va, vb)
            for i in range(N):
                xtmp[i] = x[i] + dt * k3[i]
            _eval_rhs(&dm, xtmp, k4, pM, pD, pLr, pRr, pLm, pLs, pRs, pC, pG, pLt, pRt,
                      pE, omega0, pirs, ppis, pns, pkd, puc, i_s, i_r, cth, sth, u_m, u_r, va, vb)
            # compensated update: the carry keeps sub-ulp increments from
            # being lost over millions of steps
            for i in range(N):
                incr = (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
                ytmp = incr - comp[i]
                snew = x[i] + ytmp
                comp[i] = (snew - x[i]) - ytmp
                x[i] = snew
            if step % stride == 0 or step == n_steps:
                t = step * dt
                for i in range(N):
                    if not isfinite(x[i]):
                        with gil:
                            return STATUS_NONFINITE, rec, t
                out_times[rec] = t
                for i in range(N):
                    out_states[rec, i] = x[i]
                rec += 1
    return STATUS_OK, rec, 0.0


# Dormand-Prince coefficients
cdef double DP_A21 = 1.0 / 5.0
cdef double DP_A31 = 3.0 / 40.0, DP_A32 = 9.0 / 40.0
cdef double DP_A41 = 44.0 / 45.0, DP_A42 = -56.0 / 15.0, DP_A43 = 32.0 / 9.0
cdef double DP_A51 = 19372.0 / 6561.0, DP_A52 = -25360.0 / 2187.0
cdef double DP_A53 = 64448.0 / 6561.0, DP_A54 = -212.0 / 729.0
cdef double DP_A61 = 9017.0 / 3168.0, DP_A62 = -355.0 / 33.0
cdef double DP_A63 = 46732.0 / 5247.0, DP_A64 = 49.0 / 176.0, DP_A65 = -5103.0 / 18656.0
cdef double DP_B1 = 35.0 / 384.0, DP_B3 = 500.0 / 1113.0, DP_B4 = 125.0 / 192.0
cdef double DP_B5 = -2187.0 / 6784.0, DP_B6 = 11.0 / 84.0
cdef double DP_E1 = 35.0 / 384.0 - 5179.0 / 57600.0
cdef double DP_E3 = 500.0 / 1113.0 - 7571.0 / 16695.0
cdef double DP_E4 = 125.0 / 192.0 - 393.0 / 640.0
cdef double DP_E5 = -2187.0 / 6784.0 + 92097.0 / 339200.0
cdef double DP_E6 = 11.0 / 84.0 - 187.0 / 2100.0
cdef double DP_E7 = -1.0 / 40.0


def run_adaptive(int kind, double[::1] x0, double t_end, double rtol, double atol,
                 double dt_min, double dt_max, double record_every,
                 double[::1] M, double[::1] D, double[::1] L_r, double[::1] R_r,
                 double[::1] L_m, double[::1] L_s, double[::1] R_s,
                 double[::1] C, double[::1] G, double[::1] L_t, double[::1] R_t,
                 double[:, ::1] E,
                 double omega0, double[::1] i_r_star,
                 double[:, ::1] pi_s, double[:, ::1] ns, double[:, ::1] kd,
                 double[::1] u_const,
                 double[::1] out_times, double[:, ::1] out_states):
    """Dormand-Prince 5(4); steps clipped to land exactly on record times.

    Returns (status, n_records, t_fail).
    """
    cdef ModelDims dm
    dm.n = M.shape[0]
    dm.m = L_t.shape[0]
    dm.N = x0.shape[0]
    dm.kind = kind
    cdef int N = dm.N
    cdef long rec = 0
    cdef int i, ok
    cdef double t = 0.0, dt, h, err, acc, sc, factor, proposal, next_record
    cdef double incr, ytmp, snew
    cdef double[::1] work = np.zeros(11 * N + 12 * dm.n, dtype=np.float64)
    cdef double* x = &work[0]
    cdef double* k1 = x + N
    cdef double* k2 = k1 + N
    cdef double* k3 = k2 + N
    cdef double* k4 = k3 + N
    cdef double* k5 = k4 + N
    cdef double* k6 = k5 + N
    cdef double* k7 = k6 + N
    cdef double* xtmp = k7 + N
    cdef double* x5 = xtmp + N
    cdef double* comp = x5 + N   # compensated-summation carry
    cdef double* i_s = comp + N
    cdef double* i_r = i_s + 2 * dm.n
    cdef double* cth = i_r + dm.n
    cdef double* sth = cth + dm.n
    cdef double* u_m = sth + dm.n
    cdef double* u_r = u_m + dm.n
    cdef double* va = u_r + dm.n
    cdef double* vb = va + 2 * dm.n

    cdef double* pM = &M[0]
    cdef double* pD = &D[0]
    cdef double* pLr = &L_r[0]
    cdef double* pRr = &R_r[0]
    cdef double* pLm = &L_m[0]
    cdef double* pLs = &L_s[0]
    cdef double* pRs = &R_s[0]
    cdef double* pC = &C[0]
    cdef double* pG = &G[0]
    cdef double* pLt = NULL
    cdef double* pRt = NULL
    cdef double* pE = NULL
    if dm.m > 0:
        pLt = &L_t[0]
        pRt = &R_t[0]
        pE = &E[0, 0]
    cdef double* pirs = &i_r_star[0]
    cdef double* ppis = &pi_s[0, 0]
    cdef double* pns = &ns[0, 0]
    cdef double* pkd = &kd[0, 0]
    cdef double* puc = &u_const[0]

    for i in range(N):
        x[i] = x0[i]
    out_times[0] = 0.0
    for i in range(N):
        out_states[0, i] = x[i]
    rec = 1
    next_record = record_every if record_every < t_end else t_end
    dt = fmin(dt_max, fmax(dt_min, record_every / 16.0))
    with nogil:
        _eval_rhs(&dm, x, k1, pM, pD, pLr, pRr, pLm, pLs, pRs, pC, pG, pLt, pRt,
                  pE, omega0, pirs, ppis, pns, pkd, puc, i_s, i_r, cth, sth, u_m, u_r, va, vb)
        while t < t_end - 1e-15 * (1.0 + t_end):
            h = dt
            if next_record - t < h:
                h = next_record - t
            for i in range(N):
                xtmp[i] = x[i] + h * DP_A21 * k1[i]
            _eval_rhs(&dm, xtmp, k2, pM, pD, pLr, pRr, pLm, pLs, pRs, pC, pG, pLt, pRt,
                      pE, omega0, pirs, ppis, pns, pkd, puc, i_s, i_r, cth, sth, u_m, u_r, va, vb)
            for i in range(N):
                xtmp[i] = x[i] + h * (DP_A31 * k1[i] + DP_A32 * k2[i])
            _eval_rhs(&dm, xtmp, k3, pM, pD, pLr, pRr, pLm, pLs, pRs, pC, pG, pLt, pRt,
                      pE, omega0, pirs, ppis, pns, pkd, puc, i_s, i_r, cth, sth, u_m, u_r, va, vb)
            for i in range(N):
                xtmp[i] = x[i] + h * (DP_A41 * k1[i] + DP_A42 * k2[i] + DP_A43 * k3[i])
            _eval_rhs(&dm, xtmp, k4, pM, pD, pLr, pRr, pLm, pLs, pRs, pC, pG, pLt, pRt,
                      pE, omega0, pirs, ppis, pns, pkd, puc, i_s, i_r, cth, sth, u_m, u_r, va, vb)
            for i in range(N):
                xtmp[i] = x[i] + h * (DP_A51 * k1[i] + DP_A52 * k2[i] + DP_A53 * k3[i] + DP_A54 * k4[i])
            _eval_rhs(&dm, xtmp, k5, pM, pD, pLr, pRr, pLm, pLs, pRs, pC, pG, pLt, pRt,
                      pE, omega0, pirs, ppis, pns, pkd, puc, i_s, i_r, cth, sth, u_m, u_r, va, vb)
            for i in range(N):
                xtmp[i] = x[i] + h * (DP_A61 * k1[i] + DP_A62 * k2[i] + DP_A63 * k3[i]
                                      + DP_A64 * k4[i] + DP_A65 * k5[i])
            _eval_rhs(&dm, xtmp, k6, pM, pD, pLr, pRr, pLm, pLs, pRs, pC, pG, pLt, pRt,
                      pE, omega0, pirs, ppis, pns, pkd, puc, i_s, i_r, cth, sth, u_m, u_r, va, vb)
            for i in range(N):
                x5[i] = x[i] + h * (DP_B1 * k1[i] + DP_B3 * k3[i] + DP_B4 * k4[i]
                                    + DP_B5 * k5[i] + DP_B6 * k6[i])
            _eval_rhs(&dm, x5, k7, pM, pD, pLr, pRr, pLm, pLs, pRs, pC, pG, pLt, pRt,
                      pE, omega0, pirs, ppis, pns, pkd, puc, i_s, i_r, cth, sth, u_m, u_r, va, vb)
            err = 0.0
            for i in range(N):
                acc = h * (DP_E1 * k1[i] + DP_E3 * k3[i] + DP_E4 * k4[i]
                           + DP_E5 * k5[i] + DP_E6 * k6[i] + DP_E7 * k7[i])
                sc = atol + rtol * fmax(fabs(x[i]), fabs(x5[i]))
                err += (acc / sc) * (acc / sc)
            err = sqrt(err / N)
            if err > 0.0:
                factor = 0.9 * pow(err, -0.2)
            else:
                factor = 5.0
            if factor > 5.0:
                factor = 5.0
            if factor < 0.2:
                factor = 0.2
            proposal = h * factor
            if err <= 1.0:
                t = t + h
                for i in range(N):
                    incr = h * (DP_B1 * k1[i] + DP_B3 * k3[i] + DP_B4 * k4[i]
                                + DP_B5 * k5[i] + DP_B6 * k6[i])
                    ytmp = incr - comp[i]
                    snew = x[i] + ytmp
                    comp[i] = (snew - x[i]) - ytmp
                    x[i] = snew
                    k1[i] = k7[i]
                if t >= next_record - 1e-12 * fmax(1.0, next_record):
                    t = next_record
                    ok = 1
                    for i in range(N):
                        if not isfinite(x[i]):
                            ok = 0
                            break
                    if not ok:
                        with gil:
                            return STATUS_NONFINITE, rec, t
                    out_times[rec] = t
                    for i in range(N):
                        out_states[rec, i] = x[i]
                    rec += 1
                    next_record = next_record + record_every
                    if next_record > t_end:
                        next_record = t_end
                if h < dt:
                    if proposal > dt:
                        dt = proposal
                else:
                    dt = proposal
            else:
                dt = proposal
            if dt > dt_max:
                dt = dt_max
            if dt < dt_min:
                with gil:
                    return STATUS_DT_UNDERFLOW, rec, t
    return STATUS_OK, rec, 0.0
