"""Block 2x2 rotation and Kronecker utilities.

Complex circuit quantities are represented throughout as real matrices in
the 2x2-block embedding a + bj -> [[a, -b], [b, a]], with the 90-degree
rotation J2 playing the role of the imaginary unit.
"""

import numpy as np

# The real embedding of the imaginary unit.
J2 = np.array([[0.0, -1.0], [1.0, 0.0]])

E1 = np.array([1.0, 0.0])
E2 = np.array([0.0, 1.0])

# Power-invariant Clarke transformation; the first two rows project a
# symmetric three-phase quantity onto the plane orthogonal to (1, 1, 1).
CLARKE_3 = np.sqrt(2.0 / 3.0) * np.array(
    [
        [1.0, -0.5, -0.5],
        [0.0, np.sqrt(3.0) / 2.0, -np.sqrt(3.0) / 2.0],
        [1.0 / np.sqrt(2.0), 1.0 / np.sqrt(2.0), 1.0 / np.sqrt(2.0)],
    ]
)


def rotation2(angle: float) -> np.ndarray:
    """Single 2x2 rotation matrix."""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def rotation_block(theta) -> np.ndarray:
    """Block-diagonal of 2x2 rotations, one block per angle (2k x 2k)."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    k = theta.shape[0]
    out = np.zeros((2 * k, 2 * k))
    c, s = np.cos(theta), np.sin(theta)
    out[0::2, 0::2] = np.diag(c)
    out[0::2, 1::2] = np.diag(-s)
    out[1::2, 0::2] = np.diag(s)
    out[1::2, 1::2] = np.diag(c)
    return out


def kron_j(k: int) -> np.ndarray:
    """Block-diagonal of k copies of J2; squares to -identity."""
    if k < 1:
        raise ValueError("kron_j requires k >= 1")
    return np.kron(np.eye(k), J2)


def kron_expand(D) -> np.ndarray:
    """Kronecker product D (x) I2: every scalar entry becomes a 2x2 scaled identity."""
    return np.kron(np.asarray(D, dtype=float), np.eye(2))


def clarke_project(z3) -> np.ndarray:
    """alpha-beta components of three-phase quantities.

    Accepts a single 3-vector or an (N, 3) stack; returns the matching
    2-vector(s). Norm-preserving on the plane orthogonal to (1, 1, 1).
    """
    z3 = np.asarray(z3, dtype=float)
    if z3.ndim == 1:
        return CLARKE_3[:2] @ z3
    return z3 @ CLARKE_3[:2].T


def is_phasor_structured(A, tol: float = 1e-12) -> bool:
    """True if every 2x2 block of A has the form [[a, -b], [b, a]]."""
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] % 2 or A.shape[1] % 2:
        return False
    scale = 1.0 + np.abs(A).max()
    ok_diag = np.abs(A[0::2, 0::2] - A[1::2, 1::2]).max() <= tol * scale
    ok_skew = np.abs(A[0::2, 1::2] + A[1::2, 0::2]).max() <= tol * scale
    return bool(ok_diag and ok_skew)


def complex_view(A) -> np.ndarray:
    """Complex matrix represented by a phasor-structured block matrix (testing aid)."""
    A = np.asarray(A)
    return A[0::2, 0::2] + 1j * A[1::2, 0::2]


def phasor_embed(Z) -> np.ndarray:
    """Real 2x2-block embedding of a complex matrix (inverse of complex_view)."""
    Z = np.atleast_2d(np.asarray(Z, dtype=complex))
    return np.kron(Z.real, np.eye(2)) + np.kron(Z.imag, J2)


def wrap_angle(theta):
    """Wrap angles to [-pi, pi)."""
    return np.mod(np.asarray(theta) + np.pi, 2.0 * np.pi) - np.pi
