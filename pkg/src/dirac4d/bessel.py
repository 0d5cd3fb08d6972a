"""Bessel functions J0, Y0, J1, Y1 of a positive real argument.

Two regimes, split at u = 8:

* u < 8: ascending power series in q = u^2/4.  The Y series carry
  their log(u/2) and 1/u parts explicitly,

      Y0 = (2/pi) (log(u/2) + gamma) J0 + (2/pi) sum_{k>=1} s_k q^k,
      Y1 = -2/(pi u) + (2/pi) log(u/2) J1 - (u/(2 pi)) sum_k c_k q^k.

* u >= 8: modulus/phase form with Chebyshev tables for P_nu and u*Q_nu
  in the variable x = 128/u^2 - 1 (frozen in _bessel_tables, generated
  at 50-digit precision by tools/gen_bessel_tables.py):

      J_nu = sqrt(2/(pi u)) (P_nu cos w - Q_nu sin w),
      Y_nu = sqrt(2/(pi u)) (P_nu sin w + Q_nu cos w),

  with w = u - nu*pi/2 - pi/4.  Both orders share one sin/cos pair.

Absolute accuracy is ~6e-14 or better up to u ~ 1e3.  Beyond that the
error grows like eps*u from rounding of the phase w; that error rotates
the (J, Y) pair jointly, so Wronskian-type combinations stay at machine
precision for all u.

scipy.special provides the same functions; an in-repo implementation
pins the accuracy floor of the kernel stack and lets the four values
(and the Hankel combinations built from them) come out of a single
fused pass.  scipy and mpmath remain as independent oracles in the
test suite.
"""
import numpy as np

from ._bessel_tables import P0, P1, UQ0, UQ1

EULER_GAMMA = 0.5772156649015329
_TWO_OVER_PI = 2.0 / np.pi

# q^k tail of the series at the matching point (q = 16) drops below
# 1e-19 relative by k = 30
_NSER = 31


def _series_coeffs():
    a = np.empty(_NSER)  # J0 = sum a_k q^k
    b = np.empty(_NSER)  # J1 = (u/2) sum b_k q^k
    s = np.empty(_NSER)  # Y0 series part, s_0 = 0
    c = np.empty(_NSER)  # Y1 series part
    a[0] = b[0] = 1.0
    s[0] = 0.0
    c[0] = 1.0 - 2.0 * EULER_GAMMA  # H_0 + H_1 - 2 gamma
    h = 0.0
    for k in range(1, _NSER):
        a[k] = -a[k - 1] / (k * k)
        b[k] = -b[k - 1] / (k * (k + 1))
        h += 1.0 / k
        s[k] = -h * a[k]
        c[k] = b[k] * (2.0 * h + 1.0 / (k + 1) - 2.0 * EULER_GAMMA)
    return a, b, s, c


_A, _B, _S, _C = _series_coeffs()
_D = _B - _A  # J2 = sum (b_k - a_k) q^k, from J2 = (2/u) J1 - J0


def _poly(coeffs, q):
    acc = np.full_like(q, coeffs[-1])
    for ck in coeffs[-2::-1]:
        acc = acc * q + ck
    return acc


def _clenshaw(coeffs, x):
    b0 = np.zeros_like(x)
    b1 = np.zeros_like(x)
    for ck in coeffs[:0:-1]:
        b0, b1 = 2.0 * x * b0 - b1 + ck, b0
    return x * b0 - b1 + coeffs[0]


def j0y0j1y1(u):
    """Evaluate J0, Y0, J1, Y1 at u >= 0 in one pass.

    Accepts scalars or arrays; returns four results of matching shape.
    At u = 0 the J values are exact (1 and 0) and the Y values are -inf.
    """
    u = np.asarray(u, dtype=np.float64)
    scalar = u.ndim == 0
    u = np.atleast_1d(u)
    j0 = np.empty_like(u)
    y0 = np.empty_like(u)
    j1 = np.empty_like(u)
    y1 = np.empty_like(u)

    lo = u < 8.0
    if lo.any():
        ul = u[lo]
        q = 0.25 * ul * ul
        j0l = _poly(_A, q)
        j1l = 0.5 * ul * _poly(_B, q)
        with np.errstate(divide="ignore", invalid="ignore"):
            lg = np.log(0.5 * ul)
            y0l = _TWO_OVER_PI * ((lg + EULER_GAMMA) * j0l + _poly(_S, q))
            y1l = (-_TWO_OVER_PI / ul + _TWO_OVER_PI * lg * j1l
                   - ul / (2.0 * np.pi) * _poly(_C, q))
        # log(0) * J1(0) = -inf * 0 above; the limit is -inf
        y1l = np.where(ul == 0.0, -np.inf, y1l)
        j0[lo], y0[lo], j1[lo], y1[lo] = j0l, y0l, j1l, y1l

    hi = ~lo
    if hi.any():
        uh = u[hi]
        x = 128.0 / (uh * uh) - 1.0
        amp = np.sqrt(2.0 / (np.pi * uh))
        p0 = _clenshaw(P0, x)
        q0 = _clenshaw(UQ0, x) / uh
        p1 = _clenshaw(P1, x)
        q1 = _clenshaw(UQ1, x) / uh
        w = uh - 0.25 * np.pi
        cw, sw = np.cos(w), np.sin(w)
        j0[hi] = amp * (p0 * cw - q0 * sw)
        y0[hi] = amp * (p0 * sw + q0 * cw)
        # order 1 phase is w - pi/2: reuse the same sin/cos pair
        j1[hi] = amp * (p1 * sw + q1 * cw)
        y1[hi] = amp * (q1 * sw - p1 * cw)

    if scalar:
        return j0[0], y0[0], j1[0], y1[0]
    return j0, y0, j1, y1


def besselj0(u):
    return j0y0j1y1(u)[0]


def bessely0(u):
    return j0y0j1y1(u)[1]


def besselj1(u):
    return j0y0j1y1(u)[2]


def bessely1(u):
    return j0y0j1y1(u)[3]


def j1_y1_regular(u):
    """J1(u) and the regularized Y1(u) + 2/(pi u), in one pass.

    The 1/u singularity of Y1 is never evaluated: for u < 8 the series
    form drops that term exactly, so the result is accurate relative to
    ITS OWN size even when u is tiny.  This is what makes threshold
    subtractions of the resolvent kernels cancellation-free.  For
    u >= 8 the direct sum costs at most one digit (the singular part is
    small there).
    """
    u = np.asarray(u, dtype=np.float64)
    scalar = u.ndim == 0
    u = np.atleast_1d(u)
    j1 = np.empty_like(u)
    y1reg = np.empty_like(u)

    lo = u < 8.0
    if lo.any():
        ul = u[lo]
        q = 0.25 * ul * ul
        j1l = 0.5 * ul * _poly(_B, q)
        with np.errstate(divide="ignore", invalid="ignore"):
            lg = np.log(0.5 * ul)
            y1l = _TWO_OVER_PI * lg * j1l - ul / (2.0 * np.pi) * _poly(_C, q)
        j1[lo] = j1l
        y1reg[lo] = np.where(ul == 0.0, 0.0, y1l)
    hi = ~lo
    if hi.any():
        _, _, j1h, y1h = j0y0j1y1(u[hi])
        j1[hi] = j1h
        y1reg[hi] = y1h + _TWO_OVER_PI / u[hi]

    if scalar:
        return j1[0], y1reg[0]
    return j1, y1reg


def j2_y2_regular(u):
    """J2(u) and the regularized Y2(u) + 4/(pi u**2), in one pass.

    Companion of :func:`j1_y1_regular` one order up.  For u < 8 the
    1/u**2 singularity is dropped in-series (J2 = sum of the J1 and J0
    series termwise, Y2 likewise with the log kept explicit), so the
    result stays accurate relative to its own size for tiny u; the
    regularized value tends to -1/pi at u = 0.
    """
    u = np.asarray(u, dtype=np.float64)
    scalar = u.ndim == 0
    u = np.atleast_1d(u)
    j2 = np.empty_like(u)
    y2reg = np.empty_like(u)

    lo = u < 8.0
    if lo.any():
        ul = u[lo]
        q = 0.25 * ul * ul
        pd = _poly(_D, q)  # J2 series; constant coefficient is 0
        pc = _poly(_C, q)
        pa = _poly(_A, q)
        ps = _poly(_S, q)
        with np.errstate(divide="ignore", invalid="ignore"):
            lg = np.log(0.5 * ul)
            y2l = (_TWO_OVER_PI * lg * pd - pc / np.pi
                   - _TWO_OVER_PI * (EULER_GAMMA * pa + ps))
        j2[lo] = pd
        y2reg[lo] = np.where(ul == 0.0, -1.0 / np.pi, y2l)
    hi = ~lo
    if hi.any():
        uh = u[hi]
        j0, y0, j1, y1 = j0y0j1y1(uh)
        j2[hi] = 2.0 * j1 / uh - j0
        y2reg[hi] = 2.0 * y1 / uh - y0 + 4.0 / (np.pi * uh * uh)

    if scalar:
        return j2[0], y2reg[0]
    return j2, y2reg


def hankel1_first_second(u, sign):
    """H^sign_1(u) and H^sign_2(u) for real u > 0, sign = +1 or -1.

    H^+_nu = J_nu + i Y_nu is the outgoing combination, H^- the
    incoming one.  Order 2 comes from the recurrence
    C_2(u) = (2/u) C_1(u) - C_0(u).
    """
    j0, y0, j1, y1 = j0y0j1y1(u)
    h0 = j0 + 1j * sign * y0
    h1 = j1 + 1j * sign * y1
    h2 = 2.0 * h1 / u - h0
    return h1, h2
