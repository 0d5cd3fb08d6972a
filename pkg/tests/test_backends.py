"""Backend equivalence: numpy core vs compiled core vs reference kernels.

The single-pair functions in dirac4d.kernels are the semantic ground
truth; the backend functions are their array-shaped fast paths and must
reproduce them to rounding.  When the compiled extension is present it
must agree with the numpy core on everything.
"""
import numpy as np
import pytest

from dirac4d import _backend, _core_py
from dirac4d import kernels as kn

try:
    from dirac4d import _corex
except ImportError:
    _corex = None

needs_ext = pytest.mark.skipif(_corex is None, reason="compiled core not built")

RNG = np.random.default_rng(91)


def pair_set(n=40):
    x = RNG.standard_normal((n, 4)) * 1.5
    y = RNG.standard_normal((n, 4)) * 1.5 + 0.3
    d = x - y
    r = np.linalg.norm(d, axis=1)
    return d, r


def test_backend_selected():
    assert _backend.BACKEND in ("compiled", "python")
    for name in ("dirac_blocks", "profile_blocks", "branch_difference_sweep"):
        assert callable(getattr(_backend, name))


class TestAgainstReference:
    def test_dirac_blocks_match_single_pair_kernel(self):
        d, r = pair_set()
        for z in (1e-4, 0.3, 6.0):
            for s, br in ((1.0, "plus"), (-1.0, "minus")):
                blocks = _core_py.dirac_blocks(z, s, 1.0, d, r)
                for k in (0, 7, 19, 33):
                    ref = kn.dirac_kernel(z, d[k], np.zeros(4), 1.0, br)
                    scale = np.max(np.abs(ref))
                    assert np.max(np.abs(blocks[k] - ref)) <= 1e-13 * scale

    def test_profile_blocks_match_single_pair_kernel(self):
        d, r = pair_set()
        c2 = -1.0 / (64 * np.pi**2)
        rec = kn.ExpansionCoefficients(
            a1=1.0, b1=1j, a2=1.0, b2=1j, c2=c2, c3=c2, diagnostics={}
        )
        for j in (0, 1, 2, 3):
            blocks = _core_py.profile_blocks(j, 1.0, c2, d, r)
            for k in (2, 11, 28):
                ref = kn.g_dirac_kernels(j, d[k], np.zeros(4), 1.0, coefficients=rec)
                scale = max(np.max(np.abs(ref)), 1e-300)
                assert np.max(np.abs(blocks[k] - ref)) <= 1e-13 * scale

    def test_sweep_matches_direct_branch_difference(self):
        disp = np.array([0.4, -0.2, 0.7, 0.1])
        r = float(np.linalg.norm(disp))
        zs = np.array([0.05, 0.9, 2.7, 14.0])
        sweep = _core_py.branch_difference_sweep(zs, 1.0, disp, r)
        for i, z in enumerate(zs):
            direct = kn.dirac_kernel(z, disp, np.zeros(4), 1.0, "plus") - kn.dirac_kernel(
                z, disp, np.zeros(4), 1.0, "minus"
            )
            assert np.max(np.abs(sweep[i] - direct)) <= 1e-12 * np.max(np.abs(direct))

    def test_sweep_small_z_is_quadratic_profile(self):
        # leading branch jump: (-i pi/2) z^2 times the constant profile
        disp = np.array([0.3, -0.2, 0.5, 0.1])
        r = float(np.linalg.norm(disp))
        zs = np.array([1e-4])
        sweep = _core_py.branch_difference_sweep(zs, 1.0, disp, r)
        lead = (-0.5j * np.pi) * zs[0] ** 2 * kn.g_dirac_kernels(1, disp, np.zeros(4), 1.0)
        assert np.max(np.abs(sweep[0] - lead)) <= 1e-8 * np.max(np.abs(lead))

    def test_sweep_is_regular_at_coincident_points(self):
        zs = np.array([1e-3, 0.2, 1.0])
        sweep = _core_py.branch_difference_sweep(zs, 1.0, np.zeros(4), 0.0)
        assert np.all(np.isfinite(sweep))
        for i, z in enumerate(zs):
            omega = np.hypot(z, 1.0)
            fd = -1j * z * z / (8 * np.pi)
            expect = np.diag(
                [omega + 1.0, omega + 1.0, z * z / (omega + 1.0), z * z / (omega + 1.0)]
            ).astype(complex) * fd
            assert np.max(np.abs(sweep[i] - expect)) <= 1e-13 * abs(fd)

    def test_sweep_reality_symmetry(self):
        # R-(x,y) = R+(y,x)^dagger makes the jump odd under swap+dagger
        disp = RNG.standard_normal(4)
        r = float(np.linalg.norm(disp))
        zs = np.geomspace(1e-3, 5.0, 7)
        fwd = _core_py.branch_difference_sweep(zs, 1.0, disp, r)
        bwd = _core_py.branch_difference_sweep(zs, 1.0, -disp, r)
        flipped = np.conj(np.swapaxes(bwd, 1, 2))
        assert np.max(np.abs(fwd + flipped)) <= 1e-14 * np.max(np.abs(fwd))


@needs_ext
class TestCompiledCore:
    def test_dirac_blocks_agree(self):
        d, r = pair_set(60)
        for z in (1e-4, 0.35, 9.0):
            for s in (1.0, -1.0):
                a = _core_py.dirac_blocks(z, s, 1.3, d, r)
                b = _corex.dirac_blocks(z, s, 1.3, d, r)
                assert np.max(np.abs(a - b)) <= 1e-13 * np.max(np.abs(a))

    def test_profile_blocks_agree(self):
        d, r = pair_set(60)
        for j in (0, 1, 2, 3):
            a = _core_py.profile_blocks(j, 0.8, -0.0015, d, r)
            b = _corex.profile_blocks(j, 0.8, -0.0015, d, r)
            assert np.max(np.abs(a - b)) <= 1e-13 * np.max(np.abs(a))

    def test_sweep_agrees(self):
        disp = np.array([0.4, -0.2, 0.7, 0.1])
        zs = np.geomspace(1e-4, 40.0, 603)
        a = _core_py.branch_difference_sweep(zs, 1.0, disp, float(np.linalg.norm(disp)))
        b = _corex.branch_difference_sweep(zs, 1.0, disp, float(np.linalg.norm(disp)))
        assert np.max(np.abs(a - b)) <= 1e-13 * np.max(np.abs(a))

    def test_compiled_rejects_bad_input_like_python(self):
        d, r = pair_set(5)
        for core in (_core_py, _corex):
            with pytest.raises(ValueError):
                core.dirac_blocks(-1.0, 1.0, 1.0, d, r)
            with pytest.raises(ValueError):
                core.dirac_blocks(1.0, 0.5, 1.0, d, r)
            with pytest.raises(ValueError):
                core.profile_blocks(5, 1.0, 0.0, d, r)
            with pytest.raises(ValueError):
                core.profile_blocks(0, 1.0, 0.0, d, np.zeros_like(r))


def test_python_core_rejects_bad_shapes():
    with pytest.raises(ValueError):
        _core_py.dirac_blocks(1.0, 1.0, 1.0, np.zeros((3, 3)), np.ones(3))
    with pytest.raises(ValueError):
        _core_py.dirac_blocks(1.0, 1.0, 1.0, np.zeros((3, 4)), np.ones(4))
    with pytest.raises(ValueError):
        _core_py.branch_difference_sweep(np.array([1.0]), 1.0, np.zeros(3), 1.0)
    with pytest.raises(ValueError):
        _core_py.branch_difference_sweep(np.array([-1.0]), 1.0, np.zeros(4), 1.0)
