"""Physical parameters, system state, machine magnetics and stored energy.

The canonical state is in flux coordinates (lam_s, lam_r); winding currents
are derived by solving the angle-dependent machine inductance system.
"""

from dataclasses import dataclass, field

import numpy as np

from .algebra import kron_expand, rotation_block


class ConfigError(ValueError):
    """Raised for malformed or physically inadmissible parameter sets."""


def _as_vector(values, name, length=None):
    arr = np.asarray(values, dtype=float).ravel()
    if length is not None and arr.shape[0] != length:
        raise ConfigError(f"{name}: expected {length} entries, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name}: non-finite entry")
    return arr


@dataclass(frozen=True)
class SystemParams:
    """All physical constants of n machines, n buses and m lines.

    Per machine: inertia M_r [kg m^2], damping D_r [N m s], rotor
    self-inductance L_r [H] and resistance R_r [Ohm], mutual inductance
    L_m [H], stator self-inductance L_s [H] and resistance R_s [Ohm].
    Per bus: capacitance C [F] and load conductance G [S]. Per line:
    inductance L_t [H] and resistance R_t [Ohm]. E is the n x m signed
    incidence matrix of the (connected) transmission graph.
    """

    M_r: np.ndarray
    D_r: np.ndarray
    L_r: np.ndarray
    R_r: np.ndarray
    L_m: np.ndarray
    L_s: np.ndarray
    R_s: np.ndarray
    C: np.ndarray
    G: np.ndarray
    L_t: np.ndarray
    R_t: np.ndarray
    E: np.ndarray
    n: int = field(init=False)
    m: int = field(init=False)

    def __post_init__(self):
        n = _as_vector(self.M_r, "M_r").shape[0]
        for name in ("M_r", "D_r", "L_r", "R_r", "L_m", "L_s", "R_s", "C", "G"):
            object.__setattr__(self, name, _as_vector(getattr(self, name), name, n))
        E = np.asarray(self.E, dtype=float)
        if E.ndim != 2 or E.shape[0] != n:
            raise ConfigError(f"incidence: expected {n} rows, got shape {E.shape}")
        m = E.shape[1]
        for name in ("L_t", "R_t"):
            object.__setattr__(self, name, _as_vector(getattr(self, name), name, m))
        object.__setattr__(self, "E", E)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "m", m)

        for name in ("M_r", "D_r", "L_r", "R_r", "L_m", "L_s", "R_s", "C", "G", "L_t", "R_t"):
            if np.any(getattr(self, name) <= 0.0):
                raise ConfigError(f"{name}: all entries must be strictly positive")
        leakage = self.L_s * self.L_r - self.L_m**2
        if np.any(leakage <= 0.0):
            raise ConfigError("L_s*L_r - L_m^2 must be strictly positive for every machine")
        for e in range(m):
            col = E[:, e]
            if not (np.sum(col == 1.0) == 1 and np.sum(col == -1.0) == 1 and np.sum(col != 0.0) == 2):
                raise ConfigError(f"incidence column {e} must contain exactly one +1 and one -1")
        rank = np.linalg.matrix_rank(E) if E.size else 0
        if rank != n - 1:
            raise ConfigError("transmission graph must be connected (rank(E) = n-1)")

    # -- expanded parameter matrices (sizes are small; built per call) --

    def L_s_blk(self):
        return kron_expand(np.diag(self.L_s))

    def R_s_blk(self):
        return kron_expand(np.diag(self.R_s))

    def C_blk(self):
        return kron_expand(np.diag(self.C))

    def G_blk(self):
        return kron_expand(np.diag(self.G))

    def L_t_blk(self):
        return kron_expand(np.diag(self.L_t))

    def R_t_blk(self):
        return kron_expand(np.diag(self.R_t))

    def E_blk(self):
        return kron_expand(self.E)

    def L_m_e1(self):
        """Stator-rotor coupling template (L_m (x) e1), shape 2n x n."""
        out = np.zeros((2 * self.n, self.n))
        out[0::2, :] = np.diag(self.L_m)
        return out

    def L_m_e2(self):
        """Quadrature coupling template (L_m (x) e2), shape 2n x n."""
        out = np.zeros((2 * self.n, self.n))
        out[1::2, :] = np.diag(self.L_m)
        return out

    def state_dim(self):
        return 7 * self.n + 2 * self.m

    def to_dict(self):
        return {
            "machines": [
                {
                    "M": self.M_r[i],
                    "D": self.D_r[i],
                    "L_r": self.L_r[i],
                    "R_r": self.R_r[i],
                    "L_m": self.L_m[i],
                    "L_s": self.L_s[i],
                    "R_s": self.R_s[i],
                }
                for i in range(self.n)
            ],
            "buses": [{"C": self.C[i], "G": self.G[i]} for i in range(self.n)],
            "lines": [{"L_t": self.L_t[e], "R_t": self.R_t[e]} for e in range(self.m)],
            "incidence": self.E.astype(int).tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        def column(section, key):
            out = []
            for idx, row in enumerate(d[section]):
                if key not in row:
                    raise ConfigError(f"missing field {section}[{idx}].{key}")
                out.append(row[key])
            return out

        for section in ("machines", "buses", "lines", "incidence"):
            if section not in d:
                raise ConfigError(f"missing section {section}")
        return cls(
            M_r=column("machines", "M"),
            D_r=column("machines", "D"),
            L_r=column("machines", "L_r"),
            R_r=column("machines", "R_r"),
            L_m=column("machines", "L_m"),
            L_s=column("machines", "L_s"),
            R_s=column("machines", "R_s"),
            C=column("buses", "C"),
            G=column("buses", "G"),
            L_t=column("lines", "L_t"),
            R_t=column("lines", "R_t"),
            E=d["incidence"],
        )


@dataclass
class State:
    """Flux-coordinate system state (omega, theta, lam_r, lam_s, v, i_t).

    theta is stored unwrapped; wrapping happens only at reporting
    boundaries. The same container is used for state derivatives.
    """

    omega: np.ndarray
    theta: np.ndarray
    lam_r: np.ndarray
    lam_s: np.ndarray
    v: np.ndarray
    i_t: np.ndarray

    def __post_init__(self):
        for name in ("omega", "theta", "lam_r", "lam_s", "v", "i_t"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float).ravel())

    def pack(self):
        return np.concatenate([self.omega, self.theta, self.lam_r, self.lam_s, self.v, self.i_t])

    @classmethod
    def unpack(cls, params, x):
        n, m = params.n, params.m
        x = np.asarray(x, dtype=float).ravel()
        if x.shape[0] != 7 * n + 2 * m:
            raise ValueError(f"state vector length {x.shape[0]} != {7 * n + 2 * m}")
        return cls(
            omega=x[:n],
            theta=x[n : 2 * n],
            lam_r=x[2 * n : 3 * n],
            lam_s=x[3 * n : 5 * n],
            v=x[5 * n : 7 * n],
            i_t=x[7 * n :],
        )

    @classmethod
    def zero(cls, params):
        n, m = params.n, params.m
        return cls(np.zeros(n), np.zeros(n), np.zeros(n), np.zeros(2 * n), np.zeros(2 * n), np.zeros(2 * m))

    def copy(self):
        return State(*(getattr(self, f).copy() for f in ("omega", "theta", "lam_r", "lam_s", "v", "i_t")))


@dataclass
class CoEnergy:
    """Gradient of the stored energy: (omega, tau_e, i_r, i_s, v, i_t)."""

    omega: np.ndarray
    tau_e: np.ndarray
    i_r: np.ndarray
    i_s: np.ndarray
    v: np.ndarray
    i_t: np.ndarray

    def pack(self):
        return np.concatenate([self.omega, self.tau_e, self.i_r, self.i_s, self.v, self.i_t])


@dataclass
class ControlInput:
    """Mechanical shaft torques u_m [N m] and excitation voltages u_r [V]."""

    u_m: np.ndarray
    u_r: np.ndarray

    def __post_init__(self):
        self.u_m = np.asarray(self.u_m, dtype=float).ravel()
        self.u_r = np.asarray(self.u_r, dtype=float).ravel()

    def pack(self):
        return np.concatenate([self.u_m, self.u_r])


def machine_inductance(params, theta) -> np.ndarray:
    """Angle-dependent machine inductance (3n x 3n: 2n stator + n rotor rows).

    Symmetric positive definite whenever L_s L_r - L_m^2 > 0 holds.
    """
    theta = np.asarray(theta, dtype=float)
    n = params.n
    R = rotation_block(theta)
    coupling = R @ params.L_m_e1()
    L = np.zeros((3 * n, 3 * n))
    L[: 2 * n, : 2 * n] = params.L_s_blk()
    L[: 2 * n, 2 * n :] = coupling
    L[2 * n :, : 2 * n] = coupling.T
    L[2 * n :, 2 * n :] = np.diag(params.L_r)
    return L


def currents_from_fluxes(params, theta, lam_s, lam_r):
    """Solve the machine inductance system for (i_s, i_r) given fluxes."""
    n = params.n
    L = machine_inductance(params, theta)
    rhs = np.concatenate([np.asarray(lam_s, float).ravel(), np.asarray(lam_r, float).ravel()])
    sol = np.linalg.solve(L, rhs)
    return sol[: 2 * n], sol[2 * n :]


def fluxes_from_currents(params, theta, i_s, i_r):
    """Linear forward map (i_s, i_r) -> (lam_s, lam_r)."""
    R = rotation_block(theta)
    coupling = R @ params.L_m_e1()
    i_s = np.asarray(i_s, float).ravel()
    i_r = np.asarray(i_r, float).ravel()
    lam_s = params.L_s_blk() @ i_s + coupling @ i_r
    lam_r = params.L_r * i_r + coupling.T @ i_s
    return lam_s, lam_r


def electrical_torque(params, theta, i_r, i_s) -> np.ndarray:
    """Air-gap torques tau_e = -I_r (L_m (x) e2)^T R_theta^T i_s."""
    theta = np.asarray(theta, float).ravel()
    i_s = np.asarray(i_s, float).ravel()
    i_r = np.asarray(i_r, float).ravel()
    c, s = np.cos(theta), np.sin(theta)
    # (R_theta e2)_i . i_s_i = -sin(theta_i) i_s_alpha + cos(theta_i) i_s_beta
    quad = -s * i_s[0::2] + c * i_s[1::2]
    return -i_r * params.L_m * quad


def stator_emf(params, theta, omega, i_r, di_r_dt) -> np.ndarray:
    """Voltage induced in the stator windings: d/dt (R_theta (L_m (x) e1) i_r)."""
    theta = np.asarray(theta, float).ravel()
    omega = np.asarray(omega, float).ravel()
    i_r = np.asarray(i_r, float).ravel()
    di_r_dt = np.asarray(di_r_dt, float).ravel()
    c, s = np.cos(theta), np.sin(theta)
    Lm = params.L_m
    out = np.empty(2 * params.n)
    out[0::2] = Lm * (-s * omega * i_r + c * di_r_dt)
    out[1::2] = Lm * (c * omega * i_r + s * di_r_dt)
    return out


def rotor_emf(params, theta, omega, i_s, di_s_dt) -> np.ndarray:
    """Voltage induced in the rotor windings: d/dt ((L_m (x) e1)^T R_theta^T i_s)."""
    theta = np.asarray(theta, float).ravel()
    omega = np.asarray(omega, float).ravel()
    i_s = np.asarray(i_s, float).ravel()
    di_s_dt = np.asarray(di_s_dt, float).ravel()
    c, s = np.cos(theta), np.sin(theta)
    quad = -s * i_s[0::2] + c * i_s[1::2]
    direct_dot = c * di_s_dt[0::2] + s * di_s_dt[1::2]
    return params.L_m * (omega * quad + direct_dot)


def magnetic_energy(params, theta, lam_s, lam_r) -> float:
    """Energy stored in the machine windings, 0.5 lam^T L_theta^{-1} lam."""
    i_s, i_r = currents_from_fluxes(params, theta, lam_s, lam_r)
    return 0.5 * (np.dot(np.asarray(lam_s, float).ravel(), i_s) + np.dot(np.asarray(lam_r, float).ravel(), i_r))


def hamiltonian(params, state) -> float:
    """Total stored energy: rotor kinetic + magnetic + capacitor + line-inductor."""
    kinetic = 0.5 * np.dot(state.omega, params.M_r * state.omega)
    magnetic = magnetic_energy(params, state.theta, state.lam_s, state.lam_r)
    cap = 0.5 * np.dot(state.v, (params.C_blk() @ state.v))
    line = 0.5 * np.dot(state.i_t, (params.L_t_blk() @ state.i_t))
    return kinetic + magnetic + cap + line


def co_energy(params, state) -> CoEnergy:
    """Co-energy variables (omega, tau_e, i_r, i_s, v, i_t) at a state."""
    i_s, i_r = currents_from_fluxes(params, state.theta, state.lam_s, state.lam_r)
    tau = electrical_torque(params, state.theta, i_r, i_s)
    return CoEnergy(
        omega=state.omega.copy(),
        tau_e=tau,
        i_r=i_r,
        i_s=i_s,
        v=state.v.copy(),
        i_t=state.i_t.copy(),
    )
