import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dirac4d.algebra import (
    I4,
    dirac_symbol,
    factorize_potential,
    k_matrix,
    k_matrix_zero_energy,
    standard_dirac_matrices,
    uc_lc_projections,
)

RNG = np.random.default_rng(20240817)


def random_hermitian(rng, n=4, scale=1.0):
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * 0.5 * (A + A.conj().T)


class TestMatrixSet:
    def test_beta_is_the_mass_sign_matrix(self):
        mats = standard_dirac_matrices(1.0)
        assert np.array_equal(mats.beta, np.diag([1, 1, -1, -1]).astype(complex))

    def test_anticommutation_all_25_pairs(self):
        mats = standard_dirac_matrices(0.7)
        five = mats.with_beta_first()
        for j, aj in enumerate(five):
            for k, ak in enumerate(five):
                want = 2.0 * (j == k) * I4
                assert np.abs(aj @ ak + ak @ aj - want).max() <= 1e-14

    def test_hermitian_and_beta_squares_to_identity(self):
        mats = standard_dirac_matrices(2.0)
        for a in mats.with_beta_first():
            assert np.abs(a - a.conj().T).max() == 0.0
        assert np.abs(mats.beta @ mats.beta - I4).max() == 0.0

    def test_alpha12_anticommutator_vanishes(self):
        mats = standard_dirac_matrices(1.0)
        a1, a2 = mats.alpha[0], mats.alpha[1]
        assert np.abs(a1 @ a2 + a2 @ a1).max() <= 1e-14

    def test_invalid_mass_rejected(self):
        with pytest.raises(ValueError):
            standard_dirac_matrices(0.0)
        with pytest.raises(ValueError):
            standard_dirac_matrices(-1.0)


class TestProjections:
    def test_upper_lower_split(self):
        proj = uc_lc_projections(standard_dirac_matrices(1.0))
        assert np.array_equal(proj.I_uc, np.diag([1.0, 1.0, 0.0, 0.0]))
        assert np.array_equal(proj.I_lc, np.diag([0.0, 0.0, 1.0, 1.0]))
        assert np.abs(proj.I_uc + proj.I_lc - np.eye(4)).max() == 0.0
        assert np.abs(proj.I_uc @ proj.I_uc - proj.I_uc).max() == 0.0


class TestSymbol:
    def test_zero_frequency_is_mass_term(self):
        mats = standard_dirac_matrices(1.3)
        assert np.abs(dirac_symbol(np.zeros(4), 1.3) - 1.3 * mats.beta).max() == 0.0

    def test_point_spectrum_at_unit_frequency(self):
        eigs = np.linalg.eigvalsh(dirac_symbol([1.0, 0, 0, 0], 1.0))
        assert np.allclose(np.sort(eigs), [-np.sqrt(2)] * 2 + [np.sqrt(2)] * 2,
                           atol=1e-12)

    def test_resolvent_factorization_identity(self):
        # (sigma - lam)(sigma + lam) = (|xi|^2 + m^2 - lam^2) I
        for _ in range(100):
            xi = RNG.normal(size=4) * 3.0
            lam = RNG.normal() * 2.0
            m = abs(RNG.normal()) + 0.1
            sym = dirac_symbol(xi, m)
            lhs = (sym - lam * I4) @ (sym + lam * I4)
            rhs = (xi @ xi + m * m - lam * lam) * I4
            assert np.abs(lhs - rhs).max() <= 1e-12 * max(1.0, np.abs(rhs).max())

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-10, 10), min_size=4, max_size=4),
           st.floats(0.01, 10))
    def test_symbol_squares_to_dispersion(self, xi, m):
        sym = dirac_symbol(xi, m)
        xi = np.asarray(xi)
        assert np.abs(sym @ sym - (xi @ xi + m * m) * I4).max() <= 1e-10 * (
            1.0 + xi @ xi + m * m)


class TestFactorization:
    def test_identity_potential(self):
        f = factorize_potential(np.eye(4))
        assert np.allclose(f.U, np.eye(4))
        assert np.allclose(f.v, np.eye(4), atol=1e-14)

    def test_diagonal_example_with_zero_eigenvalue(self):
        f = factorize_potential(np.diag([-4.0, 1.0, 0.0, 9.0]))
        assert np.abs(f.vstar @ f.U @ f.v - f.V).max() <= 1e-12 * 9.0
        # sign(0) := +1, so exactly one -1 on the diagonal of U
        assert sorted(np.diag(f.U).real) == [-1.0, 1.0, 1.0, 1.0]
        assert np.abs(f.U @ f.U - np.eye(4)).max() == 0.0
        # rows of v carry |lambda|^(1/2) along the matched axes
        mags = sorted(np.abs(f.v).max(axis=1))
        assert np.allclose(mags, [0.0, 1.0, 2.0, 3.0], atol=1e-14)

    def test_random_reconstruction(self):
        for _ in range(50):
            V = random_hermitian(RNG, scale=RNG.uniform(0.1, 10))
            f = factorize_potential(V)
            err = np.abs(f.vstar @ f.U @ f.v - V).max()
            assert err <= 1e-12 * max(np.abs(V).max(), 1e-30)
            assert np.abs(f.U @ f.U - np.eye(4)).max() == 0.0

    def test_deterministic_output(self):
        V = random_hermitian(np.random.default_rng(7))
        f1 = factorize_potential(V)
        f2 = factorize_potential(np.ascontiguousarray(V.conj().T))
        assert np.array_equal(f1.v, f2.v)
        assert np.array_equal(f1.U, f2.U)

    def test_non_hermitian_rejected(self):
        bad = np.eye(4) + 1e-6 * np.array([[0, 1, 0, 0]] + [[0] * 4] * 3)
        with pytest.raises(ValueError):
            factorize_potential(bad)


class TestKMatrix:
    def test_analytic_eigenvalues_match_dense_solver(self):
        for _ in range(50):
            m = RNG.uniform(0.2, 3.0)
            omega = RNG.uniform(0.01, 0.99) * m
            xi = RNG.normal(size=4) * RNG.uniform(0.1, 5.0)
            K, lams = k_matrix(omega, xi, m)
            assert np.abs(K - K.conj().T).max() <= 1e-14 * np.abs(K).max()
            dense = np.linalg.eigvalsh(K)
            want = np.sort(np.asarray(lams))
            assert np.abs(dense - want).max() <= 1e-10 * want.max()
            assert dense.min() > 0.0

    def test_small_energy_limit_of_tau(self):
        m, xi = 1.7, np.array([0.3, -0.4, 1.1, 0.2])
        K, _ = k_matrix(1e-8, xi, m)
        xi2 = xi @ xi
        tau = K[2, 2].real * xi2 * (1e-16 + xi2)
        assert abs(tau - xi2 / (2 * m)) <= 1e-12

    def test_zero_energy_limit_matches_squared_form(self):
        m = 0.9
        for _ in range(10):
            xi = RNG.normal(size=4)
            K, _ = k_matrix(1e-9, xi, m)
            K0 = k_matrix_zero_energy(xi, m)
            assert np.abs(K - K0).max() <= 1e-10 * np.abs(K0).max()

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            k_matrix(0.5, np.zeros(4), 1.0)
        with pytest.raises(ValueError):
            k_matrix(1.5, np.ones(4), 1.0)
        with pytest.raises(ValueError):
            k_matrix(0.0, np.ones(4), 1.0)

    def test_eigenvalue_monotonicity_on_declared_grid(self):
        # On omega/m in [0.025, 0.75] x |xi|/m in [0.05, 2] the large
        # pair is nonincreasing in omega while the small pair is
        # nondecreasing (tau grows with omega and dominates the small
        # branch; the denominator dominates the large one).  Outside
        # this window the large pair turns around: tau's square-root
        # cusp at omega = m wins for any |xi|, and for |xi| ≳ 2.8 m the
        # large pair increases from omega = 0 on.  Both directions are
        # asserted so a sign slip in tau shows up immediately.
        m = 1.0
        omegas = np.linspace(0.025, 0.75, 20) * m
        radii = np.linspace(0.05, 2.0, 20) * m
        direction = np.array([1.0, 0.0, 0.0, 0.0])
        for rho in radii:
            lam_hi, lam_lo = [], []
            for omega in omegas:
                _, lams = k_matrix(omega, rho * direction, m)
                lam_hi.append(lams[0])
                lam_lo.append(lams[2])
                assert min(lams) > 0.0
            assert np.all(np.diff(lam_hi) <= 1e-14)
            assert np.all(np.diff(lam_lo) >= -1e-14)
