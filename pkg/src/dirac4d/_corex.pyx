# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twin of :mod:`dirac4d._core_py`.

Same three functions, same signatures, same conventions; the Bessel
evaluation is a scalar C port of :mod:`dirac4d.bessel` (series below
u = 8, Chebyshev modulus/phase tables above), with the coefficient
data copied out of the Python module once at import so the two
implementations can never drift apart.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport cos, log, sin, sqrt

from . import bessel as _pyb
from .algebra import standard_dirac_matrices

cnp.import_array()

cdef double _PI = 3.141592653589793238462643383279502884
cdef double _TWO_OVER_PI = 2.0 / _PI
cdef double _EG = 0.5772156649015329

# ---------------------------------------------------------------- tables
cdef int _NSER = 0
cdef double _CA[40]   # J0 series
cdef double _CB[40]   # J1 series
cdef double _CS[40]   # Y0 series part
cdef double _CC[40]   # Y1 series part
cdef double _CD[40]   # shifted J2 series: J2/u**2 = 0.25 * sum CD[k] q^k
cdef int _NP0 = 0, _NP1 = 0, _NQ0 = 0, _NQ1 = 0
cdef double _TP0[24]
cdef double _TP1[24]
cdef double _TQ0[24]
cdef double _TQ1[24]


def _load_tables():
    global _NSER, _NP0, _NP1, _NQ0, _NQ1
    cdef int k
    a = np.asarray(_pyb._A, dtype=np.float64)
    b = np.asarray(_pyb._B, dtype=np.float64)
    s = np.asarray(_pyb._S, dtype=np.float64)
    c = np.asarray(_pyb._C, dtype=np.float64)
    dshift = (b - a)[1:]
    if a.shape[0] > 40:
        raise RuntimeError("series table longer than compiled storage")
    _NSER = a.shape[0]
    for k in range(_NSER):
        _CA[k] = a[k]
        _CB[k] = b[k]
        _CS[k] = s[k]
        _CC[k] = c[k]
    for k in range(_NSER - 1):
        _CD[k] = dshift[k]
    from ._bessel_tables import P0, P1, UQ0, UQ1
    if max(len(P0), len(P1), len(UQ0), len(UQ1)) > 24:
        raise RuntimeError("Chebyshev table longer than compiled storage")
    _NP0 = len(P0)
    _NP1 = len(P1)
    _NQ0 = len(UQ0)
    _NQ1 = len(UQ1)
    for k in range(_NP0):
        _TP0[k] = P0[k]
    for k in range(_NP1):
        _TP1[k] = P1[k]
    for k in range(_NQ0):
        _TQ0[k] = UQ0[k]
    for k in range(_NQ1):
        _TQ1[k] = UQ1[k]


_load_tables()

# alpha-matrix structure: alpha . d has the 2x2 block form
#   [[0, B], [C, 0]],  B = sigma.d + i d4,  C = sigma.d - i d4,
# which the fill routines below hard-code; checked against the Python
# matrices at import time.
_matsd = standard_dirac_matrices(1.0)
_ALPHA_STACK = np.stack(_matsd.alpha)


def _alpha_structure_check():
    rng = np.random.default_rng(7)
    d = rng.standard_normal(4)
    ad = np.einsum("i,ijk->jk", d, _ALPHA_STACK)
    ref = np.zeros((4, 4), dtype=complex)
    ref[0, 2] = d[2] + 1j * d[3]
    ref[0, 3] = d[1] - 1j * d[0]
    ref[1, 2] = d[1] + 1j * d[0]
    ref[1, 3] = -d[2] + 1j * d[3]
    ref[2, 0] = d[2] - 1j * d[3]
    ref[2, 1] = d[1] - 1j * d[0]
    ref[3, 0] = d[1] + 1j * d[0]
    ref[3, 1] = -d[2] - 1j * d[3]
    if not np.allclose(ad, ref, atol=1e-15):
        raise RuntimeError("compiled alpha-block layout out of sync")


_alpha_structure_check()


# ---------------------------------------------------------------- bessel
cdef void _quartet(double u, double* j0, double* y0, double* j1,
                   double* y1) noexcept nogil:
    cdef double q, accA, accB, accS, accC, lg
    cdef double x, amp, p0, q0, p1, q1, w, cw, sw, b0, b1, t
    cdef int k
    if u < 8.0:
        q = 0.25 * u * u
        accA = _CA[_NSER - 1]
        accB = _CB[_NSER - 1]
        accS = _CS[_NSER - 1]
        accC = _CC[_NSER - 1]
        for k in range(_NSER - 2, -1, -1):
            accA = accA * q + _CA[k]
            accB = accB * q + _CB[k]
            accS = accS * q + _CS[k]
            accC = accC * q + _CC[k]
        j0[0] = accA
        j1[0] = 0.5 * u * accB
        lg = log(0.5 * u)
        y0[0] = _TWO_OVER_PI * ((lg + _EG) * accA + accS)
        y1[0] = (-_TWO_OVER_PI / u + _TWO_OVER_PI * lg * j1[0]
                 - u / (2.0 * _PI) * accC)
    else:
        x = 128.0 / (u * u) - 1.0
        amp = sqrt(2.0 / (_PI * u))
        b0 = 0.0
        b1 = 0.0
        for k in range(_NP0 - 1, 0, -1):
            t = 2.0 * x * b0 - b1 + _TP0[k]
            b1 = b0
            b0 = t
        p0 = x * b0 - b1 + _TP0[0]
        b0 = 0.0
        b1 = 0.0
        for k in range(_NQ0 - 1, 0, -1):
            t = 2.0 * x * b0 - b1 + _TQ0[k]
            b1 = b0
            b0 = t
        q0 = (x * b0 - b1 + _TQ0[0]) / u
        b0 = 0.0
        b1 = 0.0
        for k in range(_NP1 - 1, 0, -1):
            t = 2.0 * x * b0 - b1 + _TP1[k]
            b1 = b0
            b0 = t
        p1 = x * b0 - b1 + _TP1[0]
        b0 = 0.0
        b1 = 0.0
        for k in range(_NQ1 - 1, 0, -1):
            t = 2.0 * x * b0 - b1 + _TQ1[k]
            b1 = b0
            b0 = t
        q1 = (x * b0 - b1 + _TQ1[0]) / u
        w = u - 0.25 * _PI
        cw = cos(w)
        sw = sin(w)
        j0[0] = amp * (p0 * cw - q0 * sw)
        y0[0] = amp * (p0 * sw + q0 * cw)
        j1[0] = amp * (p1 * sw + q1 * cw)
        y1[0] = amp * (q1 * sw - p1 * cw)


cdef void _smooth_j_ratios(double u, double* j1_over_u,
                           double* j2_over_u2) noexcept nogil:
    """J1(u)/u and J2(u)/u**2, regular through u = 0."""
    cdef double q, accB, accD, j0, y0, j1, y1
    cdef int k
    if u < 8.0:
        q = 0.25 * u * u
        accB = _CB[_NSER - 1]
        for k in range(_NSER - 2, -1, -1):
            accB = accB * q + _CB[k]
        accD = _CD[_NSER - 2]
        for k in range(_NSER - 3, -1, -1):
            accD = accD * q + _CD[k]
        j1_over_u[0] = 0.5 * accB
        j2_over_u2[0] = 0.25 * accD
    else:
        _quartet(u, &j0, &y0, &j1, &y1)
        j1_over_u[0] = j1 / u
        j2_over_u2[0] = (2.0 * j1 / u - j0) / (u * u)


# ------------------------------------------------------------ block fills
cdef inline void _fill_alpha(double complex* o, double d0, double d1,
                             double d2, double d3,
                             double complex coef) noexcept nogil:
    """Add coef * (alpha . d) to a row-major 4x4 block."""
    cdef double complex b11 = d2 + 1j * d3
    cdef double complex b12 = d1 - 1j * d0
    cdef double complex b21 = d1 + 1j * d0
    cdef double complex b22 = -d2 + 1j * d3
    o[0 * 4 + 2] += coef * b11
    o[0 * 4 + 3] += coef * b12
    o[1 * 4 + 2] += coef * b21
    o[1 * 4 + 3] += coef * b22
    o[2 * 4 + 0] += coef * (d2 - 1j * d3)
    o[2 * 4 + 1] += coef * b12
    o[3 * 4 + 0] += coef * b21
    o[3 * 4 + 1] += coef * (-d2 - 1j * d3)


def dirac_blocks(double z, double sign, double m, double[:, ::1] d,
                 double[::1] r):
    """See :func:`dirac4d._core_py.dirac_blocks`."""
    cdef Py_ssize_t p, n = r.shape[0]
    if d.shape[0] != n or d.shape[1] != 4:
        raise ValueError("displacements must have shape (P, 4)")
    if z <= 0.0 or m <= 0.0:
        raise ValueError("z and m must be positive")
    if sign != 1.0 and sign != -1.0:
        raise ValueError("sign must be +1 or -1")
    cdef cnp.ndarray[cnp.complex128_t, ndim=3] out = np.zeros(
        (n, 4, 4), dtype=np.complex128)
    cdef double complex* o = <double complex*> cnp.PyArray_DATA(out)
    cdef double u, rr, j0, y0, j1, y1, omega = sqrt(z * z + m * m)
    cdef double du, dl
    cdef double complex h0, h1, h2, f, fp, coef
    for p in range(n):
        rr = r[p]
        if rr <= 0.0:
            raise ValueError("resolvent blocks need r > 0 at every pair")
    du = omega + m
    dl = z * z / (omega + m)
    with nogil:
        for p in range(n):
            rr = r[p]
            u = z * rr
            _quartet(u, &j0, &y0, &j1, &y1)
            h0 = j0 + 1j * sign * y0
            h1 = j1 + 1j * sign * y1
            h2 = 2.0 * h1 / u - h0
            f = -sign * 0.125j * z * z * h1 / (_PI * u)
            fp = sign * 0.125j * z * z * z * h2 / (_PI * u)
            coef = -1j * fp / rr
            _fill_alpha(o + 16 * p, d[p, 0], d[p, 1], d[p, 2], d[p, 3], coef)
            o[16 * p + 0] += du * f
            o[16 * p + 5] += du * f
            o[16 * p + 10] += dl * f
            o[16 * p + 15] += dl * f
    return out


def profile_blocks(int j, double m, double c2, double[:, ::1] d,
                   double[::1] r):
    """See :func:`dirac4d._core_py.profile_blocks`."""
    cdef Py_ssize_t p, n = r.shape[0]
    if d.shape[0] != n or d.shape[1] != 4:
        raise ValueError("displacements must have shape (P, 4)")
    if m <= 0.0:
        raise ValueError("mass must be positive")
    if j < 0 or j > 3:
        raise ValueError("profile order must be 0..3")
    cdef cnp.ndarray[cnp.complex128_t, ndim=3] out = np.zeros(
        (n, 4, 4), dtype=np.complex128)
    cdef double complex* o = <double complex*> cnp.PyArray_DATA(out)
    cdef double rr, uc, full
    cdef double complex coef
    if j == 0 or j == 2:
        for p in range(n):
            if r[p] <= 0.0:
                raise ValueError("profile order %d is singular at r = 0" % j)
    with nogil:
        for p in range(n):
            rr = r[p]
            if j == 0:
                coef = -1j / (2.0 * _PI * _PI * rr * rr * rr * rr)
                _fill_alpha(o + 16 * p, d[p, 0], d[p, 1], d[p, 2], d[p, 3],
                            coef)
                uc = -m / (2.0 * _PI * _PI * rr * rr)
                o[16 * p + 0] += uc
                o[16 * p + 5] += uc
            elif j == 1:
                uc = m / (2.0 * _PI * _PI)
                o[16 * p + 0] += uc
                o[16 * p + 5] += uc
            elif j == 2:
                coef = -1j / (8.0 * _PI * _PI * rr * rr)
                _fill_alpha(o + 16 * p, d[p, 0], d[p, 1], d[p, 2], d[p, 3],
                            coef)
                uc = (m / (4.0 * _PI * _PI)) * log(rr)
                full = -1.0 / (8.0 * m * _PI * _PI * rr * rr)
                o[16 * p + 0] += uc + full
                o[16 * p + 5] += uc + full
                o[16 * p + 10] += full
                o[16 * p + 15] += full
            else:
                coef = -2j * c2
                _fill_alpha(o + 16 * p, d[p, 0], d[p, 1], d[p, 2], d[p, 3],
                            coef)
                uc = 2.0 * m * c2 * rr * rr
                o[16 * p + 0] += uc
                o[16 * p + 5] += uc
    return out


def branch_difference_sweep(double[::1] zs, double m, double[::1] d,
                            double r):
    """See :func:`dirac4d._core_py.branch_difference_sweep`."""
    cdef Py_ssize_t k, n = zs.shape[0]
    if d.shape[0] != 4:
        raise ValueError("displacement must have shape (4,)")
    if m <= 0.0 or r < 0.0:
        raise ValueError("zs and m must be positive and r nonnegative")
    for k in range(n):
        if zs[k] <= 0.0:
            raise ValueError("zs and m must be positive and r nonnegative")
    cdef cnp.ndarray[cnp.complex128_t, ndim=3] out = np.zeros(
        (n, 4, 4), dtype=np.complex128)
    cdef double complex* o = <double complex*> cnp.PyArray_DATA(out)
    cdef double z, u, j1ou, j2ouu, omega, du, dl, acoef
    cdef double complex fd
    with nogil:
        for k in range(n):
            z = zs[k]
            u = z * r
            _smooth_j_ratios(u, &j1ou, &j2ouu)
            fd = -0.25j * z * z * j1ou / _PI
            acoef = 0.25 * z * z * z * z * j2ouu / _PI
            omega = sqrt(z * z + m * m)
            du = omega + m
            dl = z * z / (omega + m)
            _fill_alpha(o + 16 * k, d[0], d[1], d[2], d[3],
                        <double complex> acoef)
            o[16 * k + 0] += du * fd
            o[16 * k + 5] += du * fd
            o[16 * k + 10] += dl * fd
            o[16 * k + 15] += dl * fd
    return out
