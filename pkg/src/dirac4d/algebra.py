"""Exact finite-dimensional Dirac-matrix algebra.

Concrete 4x4 matrix representation (anticommuting alpha set plus the
mass matrix beta), the momentum-space symbol, the upper/lower-component
spectral projections, the pointwise sign-factorization of a Hermitian
potential matrix, and the positive matrix family K(omega, xi) whose
positivity certifies invertibility of the second-threshold Gram
operator assembled in the spectral module.

Everything here is pure and operates on immutable small matrices; all
functions are safe to call from concurrent workers.
"""
from dataclasses import dataclass

import numpy as np

I2 = np.eye(2, dtype=complex)
I4 = np.eye(4, dtype=complex)

# Pauli-type 2x2 building blocks, in the index convention fixed by the
# 4x4 alpha set below (sigma1 couples to the second coordinate's
# standard matrix and vice versa; the anticommutation tests pin this).
SIGMA = (
    np.array([[0, -1j], [1j, 0]]),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


@dataclass(frozen=True)
class Tolerances:
    """Centralized tolerance constants for the matrix algebra layer."""
    anticommutator: float = 1e-14
    hermiticity: float = 1e-12
    reconstruction: float = 1e-12


TOL = Tolerances()


@dataclass(frozen=True)
class DiracMatrixSet:
    """The concrete beta and alpha_1..alpha_4 together with the mass."""
    beta: np.ndarray
    alpha: tuple  # (alpha_1, alpha_2, alpha_3, alpha_4)
    m: float

    def with_beta_first(self):
        """(alpha_0 := beta, alpha_1, .., alpha_4) for invariant sweeps."""
        return (self.beta,) + self.alpha


@dataclass(frozen=True)
class UcLcProjections:
    """Projections onto the upper/lower two spinor components.

    M_uc / M_lc are semantic tags naming the rank-deficient integration
    operators f -> I_uc * integral(f) and f -> I_lc * integral(f); their
    discretizations live in the assembly module.
    """
    I_uc: np.ndarray
    I_lc: np.ndarray
    M_uc: str = "integrate-then-project-upper"
    M_lc: str = "integrate-then-project-lower"


@dataclass(frozen=True)
class PointFactorization:
    """Pointwise V = vstar @ U @ v with U a diagonal sign matrix."""
    V: np.ndarray
    v: np.ndarray
    vstar: np.ndarray
    U: np.ndarray


def standard_dirac_matrices(m):
    """The concrete anticommuting matrix set at mass m > 0.

    beta = diag(1, 1, -1, -1); alpha_i (i = 1..3) put SIGMA[i-1] on the
    off-diagonal blocks; alpha_4 = i * [[0, I], [-I, 0]].
    """
    if not m > 0:
        raise ValueError(f"mass must be positive, got {m}")
    beta = np.diag([1.0, 1.0, -1.0, -1.0]).astype(complex)
    zeros = np.zeros((2, 2), dtype=complex)
    alphas = [np.block([[zeros, s], [s, zeros]]) for s in SIGMA]
    alphas.append(1j * np.block([[zeros, I2], [-I2, zeros]]))
    return DiracMatrixSet(beta=beta, alpha=tuple(alphas), m=float(m))


def uc_lc_projections(mats):
    """Upper/lower-component projections I_uc = (beta + I)/2 etc."""
    I_uc = 0.5 * (mats.beta + I4)
    I_lc = 0.5 * (I4 - mats.beta)
    return UcLcProjections(I_uc=I_uc.real, I_lc=I_lc.real)


def dirac_symbol(xi, m):
    """Momentum-space symbol alpha . xi + m beta (4x4 Hermitian).

    Squares to (|xi|^2 + m^2) I, which is what makes the square-root
    dispersion relation exact at the matrix level.
    """
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (4,) or not np.all(np.isfinite(xi)):
        raise ValueError("xi must be a finite 4-vector")
    mats = standard_dirac_matrices(m)
    sym = m * mats.beta
    for comp, a in zip(xi, mats.alpha):
        sym = sym + comp * a
    return sym


def factorize_potential(Vx):
    """Sign-factorize a Hermitian 4x4 matrix: V = vstar @ U @ v.

    v = |Lambda|^(1/2) B with V = B* Lambda B the eigendecomposition,
    U = diag(sign(lambda_k)) with sign(0) := +1 so that U @ U = I holds
    unconditionally.  Eigenvector phases are fixed by making the first
    component of significant magnitude real positive, so algebraically
    equal inputs factor identically.
    """
    Vx = np.asarray(Vx, dtype=complex)
    scale = max(np.abs(Vx).max(), 1.0)
    if np.abs(Vx - Vx.conj().T).max() > TOL.hermiticity * scale:
        raise ValueError("potential matrix is not Hermitian")
    lam, Q = np.linalg.eigh(0.5 * (Vx + Vx.conj().T))
    for k in range(Q.shape[1]):
        col = Q[:, k]
        idx = np.argmax(np.abs(col) > 1e-8 * np.abs(col).max())
        phase = col[idx] / abs(col[idx])
        Q[:, k] = col / phase
    u_signs = np.where(lam < 0.0, -1.0, 1.0)
    v = np.sqrt(np.abs(lam))[:, None] * Q.conj().T
    return PointFactorization(V=Vx, v=v, vstar=v.conj().T, U=np.diag(u_signs))


def k_matrix(omega, xi, m):
    """The Hermitian positive matrix K(omega, xi) and its eigenvalues.

    Defined for 0 < omega < m and xi != 0 as

        K = [[2m+tau, 0,      kappa,  eta_b ],
             [0,      2m+tau, eta,    -kap_b],
             [kap_b,  eta_b,  tau,    0     ],
             [eta,    -kappa, 0,      tau   ]] / (|xi|^2 (omega^2+|xi|^2))

    with eta = xi2 + i*xi1, kappa = xi3 + i*xi4 and
    tau = |xi|^2 (m - sqrt(m^2-omega^2)) / omega^2, evaluated in the
    cancellation-free form |xi|^2 / (m + sqrt(m^2-omega^2)).

    Writing K = ((m+tau) I + W) / denom with W*W = (m^2+|xi|^2) I gives
    the analytic eigenvalues

        lambda_{1,2} = (m + tau + sqrt(m^2+|xi|^2)) / denom,
        lambda_{3,4} = (m + tau - sqrt(m^2+|xi|^2)) / denom,

    returned in that order.  All four are strictly positive because
    tau >= |xi|^2/(2m) implies m + tau >= sqrt(m^2 + |xi|^2).
    """
    if not (0.0 < omega < m):
        raise ValueError(f"omega must lie in (0, m), got {omega}")
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (4,):
        raise ValueError("xi must be a 4-vector")
    xi2 = float(xi @ xi)
    if xi2 == 0.0:
        raise ValueError("xi must be nonzero")

    tau = xi2 / (m + np.sqrt(m * m - omega * omega))
    eta = xi[1] + 1j * xi[0]
    kap = xi[2] + 1j * xi[3]
    top = np.array([
        [2 * m + tau, 0.0, kap, np.conj(eta)],
        [0.0, 2 * m + tau, eta, -np.conj(kap)],
        [np.conj(kap), np.conj(eta), tau, 0.0],
        [eta, -kap, 0.0, tau],
    ])
    denom = xi2 * (omega * omega + xi2)
    root = np.sqrt(m * m + xi2)
    lam_hi = (m + tau + root) / denom
    lam_lo = (m + tau - root) / denom
    return top / denom, (lam_hi, lam_hi, lam_lo, lam_lo)


def k_matrix_zero_energy(xi, m):
    """The omega -> 0 limit: K(0, xi) = B(xi)^2 / (2 m |xi|^4)."""
    xi = np.asarray(xi, dtype=float)
    xi2 = float(xi @ xi)
    if xi2 == 0.0:
        raise ValueError("xi must be nonzero")
    eta = xi[1] + 1j * xi[0]
    kap = xi[2] + 1j * xi[3]
    B = np.array([
        [2 * m, 0.0, kap, np.conj(eta)],
        [0.0, 2 * m, eta, -np.conj(kap)],
        [np.conj(kap), np.conj(eta), 0.0, 0.0],
        [eta, -kap, 0.0, 0.0],
    ])
    return (B @ B) / (2.0 * m * xi2 * xi2)
