"""Vectorized numpy implementation of the hot assembly loops.

Three functions dominate the runtime of the discretized operators and
the propagator sweeps, and they are the whole backend surface:

* :func:`dirac_blocks` -- free Dirac resolvent blocks at many
  displacement pairs (the inner loop of Birman-Schwinger assembly),
* :func:`profile_blocks` -- the threshold matrix profiles at many
  pairs (the inner loop of the expansion-operator assembly),
* :func:`branch_difference_sweep` -- the branch jump of the resolvent
  kernel across the spectrum at one displacement over a whole grid of
  spectral points (the inner loop of the oscillatory time integrals).

A compiled twin with identical signatures lives in ``_corex``; import
selection happens in :mod:`dirac4d._backend`.  Everything here is pure
numpy so the package works without a C toolchain.

Conventions match :mod:`dirac4d.kernels` exactly (same Bessel stack,
same ``z**2/(omega + m)`` form of the lower-component diagonal), and the
test suite pins each function to the single-pair reference kernels.
"""
import numpy as np

from . import bessel
from .algebra import standard_dirac_matrices

_PI = np.pi
_MATS = standard_dirac_matrices(1.0)
_ALPHA = np.stack(_MATS.alpha)  # (4, 4, 4)
_BETA = _MATS.beta.astype(np.complex128)
_IUC = 0.5 * (_BETA + np.eye(4)).astype(np.complex128)
_I4 = np.eye(4, dtype=np.complex128)
# J2(u)/u**2 = 0.25 * sum_k D[k+1] q^k with D = B - A (series in q = u**2/4)
_J2_SHIFT = (bessel._B - bessel._A)[1:]


def _alpha_dot_many(d):
    """alpha . d for a (P, 4) array of displacements -> (P, 4, 4)."""
    return np.einsum("pi,ijk->pjk", d, _ALPHA)


def _check_pairs(d, r):
    d = np.ascontiguousarray(d, dtype=np.float64)
    r = np.ascontiguousarray(r, dtype=np.float64)
    if d.ndim != 2 or d.shape[1] != 4:
        raise ValueError("displacements must have shape (P, 4)")
    if r.shape != (d.shape[0],):
        raise ValueError("distances must have shape (P,)")
    return d, r


def dirac_blocks(z, sign, m, d, r):
    """Free Dirac resolvent blocks at P pairs -> (P, 4, 4) complex.

    ``d`` holds the displacements x - y, ``r`` their norms (pre-computed
    by the caller, which typically reuses them across many ``z``).
    """
    d, r = _check_pairs(d, r)
    if z <= 0.0 or m <= 0.0:
        raise ValueError("z and m must be positive")
    if sign not in (1.0, -1.0, 1, -1):
        raise ValueError("sign must be +1 or -1")
    if np.any(r <= 0.0):
        raise ValueError("resolvent blocks need r > 0 at every pair")
    s = float(sign)
    u = z * r
    j0, y0, j1, y1 = bessel.j0y0j1y1(u)
    h0 = j0 + 1j * s * y0
    h1 = j1 + 1j * s * y1
    h2 = 2.0 * h1 / u - h0
    f = -s * 0.125j * z * z * h1 / (_PI * u)
    fp = s * 0.125j * z**3 * h2 / (_PI * u)
    omega = np.hypot(z, m)
    out = -1j * _alpha_dot_many(d) * (fp / r)[:, None, None]
    diag = np.array(
        [omega + m, omega + m, z * z / (omega + m), z * z / (omega + m)]
    )
    out[:, range(4), range(4)] += diag[None, :] * f[:, None]
    return out


def profile_blocks(j, m, c2, d, r):
    """Threshold profile blocks of order ``j`` at P pairs -> (P, 4, 4).

    ``c2`` is the fitted cubic-profile amplitude; it is only read for
    ``j = 3`` (pass anything, e.g. 0.0, for the other orders).
    """
    d, r = _check_pairs(d, r)
    if m <= 0.0:
        raise ValueError("mass must be positive")
    if j not in (0, 1, 2, 3):
        raise ValueError("profile order must be 0..3")
    if j in (0, 2) and np.any(r <= 0.0):
        raise ValueError("profile order %d is singular at r = 0" % j)
    p = d.shape[0]
    out = np.zeros((p, 4, 4), dtype=np.complex128)
    if j == 1:
        out += (m / (2.0 * _PI**2)) * _IUC
        return out
    if j == 0:
        alpha_coef = -1j / (2.0 * _PI**2 * r**4)
        out += alpha_coef[:, None, None] * _alpha_dot_many(d)
        out += (-m / (2.0 * _PI**2 * r**2))[:, None, None] * _IUC
        return out
    if j == 2:
        alpha_coef = -1j / (8.0 * _PI**2 * r**2)
        out += alpha_coef[:, None, None] * _alpha_dot_many(d)
        out += ((m / (4.0 * _PI**2)) * np.log(r))[:, None, None] * _IUC
        out += (-1.0 / (8.0 * m * _PI**2 * r**2))[:, None, None] * _I4
        return out
    # j == 3
    out += (-2j * c2) * _alpha_dot_many(d)
    out += (2.0 * m * c2 * r**2)[:, None, None] * _IUC
    return out


def branch_difference_sweep(zs, m, d, r):
    """Branch jump of the resolvent kernel over a grid of spectral points.

    For one displacement (``d`` of shape (4,), ``r = |d|``) and a 1-D
    array ``zs`` of positive spectral points, returns the (Z, 4, 4)
    array of plus-minus kernel differences.  Only the regular Bessel
    functions enter, so the sweep is smooth down to r = 0 and z -> 0
    (where it behaves like z**2 times the constant profile block).
    """
    zs = np.ascontiguousarray(zs, dtype=np.float64)
    d = np.ascontiguousarray(d, dtype=np.float64)
    if zs.ndim != 1:
        raise ValueError("zs must be a 1-D array")
    if d.shape != (4,):
        raise ValueError("displacement must have shape (4,)")
    if np.any(zs <= 0.0) or m <= 0.0 or r < 0.0:
        raise ValueError("zs and m must be positive and r nonnegative")
    u = zs * r
    lo = u < 8.0
    j1_over_u = np.empty_like(u)
    j2_over_u2 = np.empty_like(u)
    if lo.any():
        q = 0.25 * u[lo] ** 2
        j1_over_u[lo] = 0.5 * bessel._poly(bessel._B, q)
        j2_over_u2[lo] = 0.25 * bessel._poly(_J2_SHIFT, q)
    hi = ~lo
    if hi.any():
        uh = u[hi]
        j0, _, j1, _ = bessel.j0y0j1y1(uh)
        j1_over_u[hi] = j1 / uh
        j2_over_u2[hi] = (2.0 * j1 / uh - j0) / uh**2
    fd = -0.25j * zs**2 * j1_over_u / _PI  # f_plus - f_minus
    alpha_coef = 0.25 * zs**4 * j2_over_u2 / _PI  # -i * (fp_plus - fp_minus)/r
    omega = np.hypot(zs, m)
    ad = np.einsum("i,ijk->jk", d, _ALPHA)
    out = alpha_coef[:, None, None] * ad[None, :, :]
    diag = np.stack(
        [omega + m, omega + m, zs**2 / (omega + m), zs**2 / (omega + m)], axis=1
    )
    out[:, range(4), range(4)] += diag * fd[:, None]
    return out
