import numpy as np
import scipy.special as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from dirac4d import bessel

# dense around the series/asymptotic seam at u = 8, log-spaced elsewhere
U_GRID = np.concatenate([
    np.geomspace(1e-6, 7.5, 400),
    np.linspace(7.5, 8.5, 201),
    np.geomspace(8.5, 1e3, 400),
])


def _close(got, ref, tol=1e-12):
    scale = np.maximum(1.0, np.abs(ref))
    return np.max(np.abs(got - ref) / scale)


def test_values_against_scipy():
    j0, y0, j1, y1 = bessel.j0y0j1y1(U_GRID)
    assert _close(j0, sp.j0(U_GRID)) < 1e-12
    assert _close(y0, sp.y0(U_GRID)) < 1e-12
    assert _close(j1, sp.j1(U_GRID)) < 1e-12
    assert _close(y1, sp.y1(U_GRID)) < 1e-12


def test_values_against_mpmath_spot():
    mp = __import__("mpmath")
    mp.mp.dps = 30
    us = np.geomspace(3e-5, 700.0, 40)
    j0, y0, j1, y1 = bessel.j0y0j1y1(us)
    for i, u in enumerate(us):
        assert abs(j0[i] - float(mp.besselj(0, u))) < 1e-12
        assert abs(j1[i] - float(mp.besselj(1, u))) < 1e-12
        ref0, ref1 = float(mp.bessely(0, u)), float(mp.bessely(1, u))
        assert abs(y0[i] - ref0) < 1e-12 * max(1.0, abs(ref0))
        assert abs(y1[i] - ref1) < 1e-12 * max(1.0, abs(ref1))


def test_wronskian_identity():
    # J1 Y0 - J0 Y1 = 2/(pi u); phase-rounding at large u cancels here
    us = np.geomspace(1e-6, 1e3, 500)
    j0, y0, j1, y1 = bessel.j0y0j1y1(us)
    w = j1 * y0 - j0 * y1
    assert np.max(np.abs(w * np.pi * us / 2.0 - 1.0)) < 1e-12


def test_limits_at_zero():
    j0, y0, j1, y1 = bessel.j0y0j1y1(0.0)
    assert j0 == 1.0 and j1 == 0.0
    assert y0 == -np.inf and y1 == -np.inf


def test_scalar_roundtrip():
    out = bessel.besselj1(2.5)
    assert np.ndim(out) == 0
    assert abs(out - sp.j1(2.5)) < 1e-13


def test_hankel_combinations():
    us = np.geomspace(1e-3, 500.0, 200)
    h1p, h2p = bessel.hankel1_first_second(us, +1)
    h1m, h2m = bessel.hankel1_first_second(us, -1)
    for got, ref in [
        (h1p, sp.hankel1(1, us)), (h2p, sp.hankel1(2, us)),
        (h1m, sp.hankel2(1, us)), (h2m, sp.hankel2(2, us)),
    ]:
        assert _close(got, ref) < 1e-12


@settings(max_examples=60, deadline=None)
@given(st.floats(min_value=1e-5, max_value=900.0))
def test_matches_scipy_everywhere(u):
    j0, y0, j1, y1 = bessel.j0y0j1y1(u)
    for got, ref in [(j0, sp.j0(u)), (y0, sp.y0(u)),
                     (j1, sp.j1(u)), (y1, sp.y1(u))]:
        assert abs(got - ref) < 1e-12 * max(1.0, abs(ref))

def test_second_order_pair_against_scipy():
    # safe region for the reference: no cancellation in y2 + 4/(pi u^2)
    us = U_GRID[U_GRID >= 1.0]
    j2, y2t = bessel.j2_y2_regular(us)
    assert _close(j2, sp.jn(2, us)) < 1e-12
    ref = sp.yn(2, us) + 4.0 / (np.pi * us * us)
    assert _close(y2t, ref) < 1e-12


def test_second_order_regularized_small_argument():
    # below u ~ 1 the subtraction 4/(pi u^2) cancels catastrophically in
    # double precision, so the reference is built in 40-digit arithmetic
    mp = __import__("mpmath")
    mp.mp.dps = 40
    for u in np.geomspace(1e-8, 1.0, 25):
        j2, y2t = bessel.j2_y2_regular(float(u))
        ref_j = float(mp.besselj(2, mp.mpf(float(u))))
        ref_y = float(
            mp.bessely(2, mp.mpf(float(u))) + 4 / (mp.pi * mp.mpf(float(u)) ** 2)
        )
        assert abs(j2 - ref_j) <= 1e-12 * max(1.0, abs(ref_j))
        assert abs(y2t - ref_y) <= 1e-12 * max(1.0, abs(ref_y))


def test_second_order_limit_at_zero():
    j2, y2t = bessel.j2_y2_regular(0.0)
    assert j2 == 0.0
    assert abs(y2t + 1.0 / np.pi) <= 1e-15
