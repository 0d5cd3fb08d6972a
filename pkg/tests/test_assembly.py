"""Grid construction, potential sampling, and dense operator assembly.

The reference numbers here come from three independent sources: closed-form
ball moments for the grid tests, a one-dimensional radial Fourier reduction
for the quadratic-profile identity (computed once with scipy.integrate.quad
against the 4D radial transform and frozen below), and structural facts
(ranks, adjointness, exactness for constant kernels) that hold to rounding.
"""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dirac4d import assembly as asm
from dirac4d import kernels as kn

RNG = np.random.default_rng(20240817)

BALL = lambda R: np.pi**2 * R**4 / 2.0

# || G0 v* phi ||^2 for the lower-spinor radial density used in the
# identity tests: envelope (1+r^2)^(-3/2) times exp(-0.35 r^2) on the
# third spinor component.  Frozen from the 1-D reduction
#   (1/(8 pi^2)) * int k |rho_hat(k)|^2 dk,
#   rho_hat(k) = 2 pi^2 int r^3 rho(r) * 2 J1(kr)/(kr) dr,
# cross-checked against the 4D shell-theorem form (1/(2 pi^2)) int A^2/r^3
# with A(r) the cumulative radial mass; the two agree to 7e-4, far below
# the 5% gate they serve.
NORM_G0_REF = 0.7795175323


def build(gen, n, extent, **kw):
    return asm.build_grid(gen, n, extent, **kw)


@pytest.fixture(scope="module")
def grid384():
    return build("tensor-gauss-radial", 384, 10.0)


@pytest.fixture(scope="module")
def fact384(grid384):
    return asm.sample_potential(asm.PotentialSpec.scalar(6.0, -1.0), grid384)


@pytest.fixture(scope="module")
def t0_384(grid384, fact384):
    return asm.assemble_Tj(grid384, fact384, 0)


class TestBuildGrid:
    def test_tensor_weight_sum_is_ball_volume(self):
        for extent in (3.0, 10.0, 14.0):
            grid = build("tensor-gauss-radial", 480, extent)
            err = abs(float(np.sum(grid.weights)) - BALL(extent))
            assert err <= 1e-12 * BALL(extent)

    def test_quasi_weight_sum_near_ball_volume(self):
        grid = build("quasi-random", 2000, 12.0, seed=3)
        err = abs(float(np.sum(grid.weights)) - BALL(12.0))
        assert err <= 2e-2 * BALL(12.0)

    @settings(max_examples=20, deadline=None)
    @given(
        st.floats(2.0, 30.0),
        st.sampled_from([1.0, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0]),
    )
    def test_tensor_weight_sum_invariant(self, extent, grading):
        # whenever 4*grading is an integer the volume element is a
        # polynomial in the radial variable and the rule captures it
        # exactly (the builder enforces enough shells)
        grid = build("tensor-gauss-radial", 480, extent, grading=grading)
        assert abs(float(np.sum(grid.weights)) - BALL(extent)) <= 1e-11 * BALL(
            extent
        )

    def test_tensor_moments_through_degree_six(self):
        # closed-form ball moments; the angular rule is exact through
        # degree 7 and the graded radial rule is polynomial-exact far
        # beyond r^9, so these hold to rounding
        R = 9.0
        grid = build("tensor-gauss-radial", 480, R)
        x, w = grid.nodes, grid.weights
        odd = float(np.sum(w * x[:, 0]))
        m22 = float(np.sum(w * x[:, 0] ** 2 * x[:, 1] ** 2))
        m4 = float(np.sum(w * x[:, 0] ** 4))
        m6 = float(np.sum(w * x[:, 0] ** 6))
        assert abs(odd) <= 1e-12 * BALL(R) * R
        assert abs(m22 - R**8 * np.pi**2 / 96.0) <= 1e-12 * m22
        assert abs(m4 - R**8 * np.pi**2 / 32.0) <= 1e-12 * m4
        want6 = (5.0 / 64.0) * 2.0 * np.pi**2 * R**10 / 10.0
        assert abs(m6 - want6) <= 1e-12 * m6

    def test_tensor_degree_eight_not_exact(self):
        # pins the angular rule's degree from above: a degree-8 moment
        # misses by a few percent, so the degree-7 exactness above is
        # not an accident of a richer rule
        R = 9.0
        grid = build("tensor-gauss-radial", 480, R)
        m8 = float(np.sum(grid.weights * grid.nodes[:, 0] ** 8))
        want8 = (7.0 / 128.0) * 2.0 * np.pi**2 * R**12 / 12.0
        rel = abs(m8 - want8) / want8
        assert 1e-3 < rel < 0.2

    def test_inverse_sixth_power_mass(self):
        # int (1+|x|^2)^(-3) over R^4 = pi^2/2; the exterior beyond
        # extent 20 carries about half a percent
        want = np.pi**2 / 2.0
        for gen, kw in (("tensor-gauss-radial", {}), ("quasi-random", {"seed": 7})):
            grid = build(gen, 2000, 20.0, **kw)
            got = float(
                np.sum(grid.weights * (1.0 + np.sum(grid.nodes**2, axis=1)) ** -3)
            )
            assert abs(got - want) <= 2e-2 * want

    def test_quasi_seed_reproducible_and_distinct(self):
        a = build("quasi-random", 300, 8.0, seed=11)
        b = build("quasi-random", 300, 8.0, seed=11)
        c = build("quasi-random", 300, 8.0, seed=12)
        assert np.array_equal(a.nodes, b.nodes)
        assert np.array_equal(a.weights, b.weights)
        assert not np.array_equal(a.nodes, c.nodes)

    def test_tensor_deterministic(self):
        a = build("tensor-gauss-radial", 240, 7.0)
        b = build("tensor-gauss-radial", 240, 7.0)
        assert np.array_equal(a.nodes, b.nodes)
        assert np.array_equal(a.weights, b.weights)

    def test_shells_share_no_rays(self):
        # adjacent shells are rotated copies of the angular set; a
        # shared ray would put two nodes at distance ~ radial gap and
        # wreck the singular-kernel quadrature
        grid = build("tensor-gauss-radial", 960, 10.0)
        r = np.linalg.norm(grid.nodes, axis=1)
        shells = np.unique(np.round(r, 10))
        per = [grid.nodes[np.isclose(r, s)] / s for s in shells]
        for k in range(len(per) - 1):
            cosang = np.clip(per[k] @ per[k + 1].T, -1.0, 1.0)
            assert np.arccos(cosang).min() > 0.1

    def test_cell_radii_match_weights(self):
        grid = build("tensor-gauss-radial", 96, 5.0)
        want = (2.0 * grid.weights / np.pi**2) ** 0.25
        assert np.array_equal(grid.cell_radii(), want)

    def test_integrate_dot(self):
        grid = build("quasi-random", 200, 6.0, seed=1)
        vals = np.sum(grid.nodes**2, axis=1)
        assert np.isclose(grid.integrate(vals), float(grid.weights @ vals))

    def test_validation(self):
        with pytest.raises(ValueError):
            build("tensor-gauss-radial", 8, 5.0)
        with pytest.raises(ValueError):
            build("hexagonal", 100, 5.0)
        with pytest.raises(ValueError):
            build("quasi-random", 100, 0.0, seed=1)
        with pytest.raises(ValueError):
            build("tensor-gauss-radial", 100, 5.0, grading=0.5)


class TestSamplePotential:
    def test_scalar_attractive(self):
        grid = build("quasi-random", 150, 6.0, seed=2)
        spec = asm.PotentialSpec.scalar(6.0, -2.0)
        fact = asm.sample_potential(spec, grid)
        s2 = np.sum(grid.nodes**2, axis=1)
        env = (1.0 + s2) ** -3.0
        # involution is -I for an attractive scalar well
        assert np.allclose(fact.involution, -np.eye(4))
        # v is the square root of |amplitude| times the envelope
        want = np.sqrt(2.0 * env)
        got = fact.vblocks[:, 0, 0].real
        assert np.abs(got - want).max() <= 1e-12
        # v* U v reproduces V at every node
        V = fact.vblocks @ fact.involution @ fact.vblocks
        wantV = (-2.0 * env)[:, None, None] * np.eye(4)
        assert np.abs(V - wantV).max() <= 1e-12

    def test_zero_amplitude(self):
        grid = build("quasi-random", 100, 5.0, seed=2)
        fact = asm.sample_potential(asm.PotentialSpec.scalar(6.0, 0.0), grid)
        assert np.abs(fact.vblocks).max() == 0.0
        assert np.array_equal(fact.involution, np.eye(4))

    def test_matrix_direction_reconstruction(self):
        grid = build("quasi-random", 120, 6.0, seed=5)
        D = np.array(
            [
                [1.0, 0.3, 0.0, 0.1],
                [0.3, -0.5, 0.2, 0.0],
                [0.0, 0.2, 0.8, 0.0],
                [0.1, 0.0, 0.0, -0.2],
            ]
        )
        spec = asm.PotentialSpec(
            profile="gaussian", delta=2.0, amplitude=1.5, direction=D
        )
        fact = asm.sample_potential(spec, grid)
        s2 = np.sum(grid.nodes**2, axis=1)
        env = np.exp(-s2)
        V = fact.vblocks @ fact.involution @ fact.vblocks
        wantV = (1.5 * env)[:, None, None] * D
        assert np.abs(V - wantV).max() <= 1e-12
        U = fact.involution
        assert np.abs(U - U.conj().T).max() <= 1e-14
        assert np.abs(U @ U - np.eye(4)).max() <= 1e-12
        herm = fact.vblocks - np.transpose(fact.vblocks, (0, 2, 1)).conj()
        assert np.abs(herm).max() <= 1e-12

    def test_envelope_decay_bound(self):
        # every entry of v is bounded by sqrt(|c| g(x)) for a direction
        # of unit spectral norm, and the gaussian envelope sits below
        # the inverse-power one at equal delta (log(1+u) <= u)
        grid = build("quasi-random", 200, 10.0, seed=9)
        s2 = np.sum(grid.nodes**2, axis=1)
        for profile, env in (
            ("inverse-power", (1.0 + s2) ** -1.75),
            ("gaussian", np.exp(-3.5 * s2 / 2.0)),
        ):
            spec = asm.PotentialSpec.scalar(3.5, -0.7, profile=profile)
            fact = asm.sample_potential(spec, grid)
            bound = np.sqrt(0.7 * env)
            assert np.all(
                np.abs(fact.vblocks).max(axis=(1, 2)) <= bound * (1 + 1e-12)
            )
        ip = (1.0 + s2) ** -3.5
        ga = np.exp(-3.5 * s2)
        assert np.all(ga <= ip * (1 + 1e-12))

    def test_off_center(self):
        grid = build("quasi-random", 100, 6.0, seed=3)
        x0 = np.array([1.0, -0.5, 0.0, 2.0])
        spec = asm.PotentialSpec.scalar(4.0, -1.0, center=x0)
        fact = asm.sample_potential(spec, grid)
        s2 = np.sum((grid.nodes - x0) ** 2, axis=1)
        want = np.sqrt((1.0 + s2) ** -2.0)
        assert np.abs(fact.vblocks[:, 2, 2].real - want).max() <= 1e-12

    def test_weighted_vblocks_and_involution_blockdiag(self):
        grid = build("quasi-random", 60, 5.0, seed=4)
        spec = asm.PotentialSpec.scalar(6.0, -1.0)
        fact = asm.sample_potential(spec, grid)
        sv = fact.weighted_vblocks()
        assert np.abs(
            sv - np.sqrt(grid.weights)[:, None, None] * fact.vblocks
        ).max() == 0.0
        big = fact.involution_blockdiag()
        n = grid.n_points
        assert big.shape == (4 * n, 4 * n)
        assert np.abs(big[:4, :4] - fact.involution).max() == 0.0
        assert np.abs(big[:4, 4:8]).max() == 0.0

    def test_validation(self):
        with pytest.raises(ValueError):
            asm.PotentialSpec.scalar(0.0, 1.0)
        with pytest.raises(ValueError):
            asm.PotentialSpec.scalar(2.0, 1.0, profile="cubic-spline")
        bad = np.eye(4) + 0.001 * np.array([[0, 1j, 0, 0]] + [[0] * 4] * 3)
        with pytest.raises(ValueError):
            asm.PotentialSpec(
                profile="gaussian", delta=2.0, amplitude=1.0, direction=bad
            )


class TestAssembleProfiles:
    def test_hermitian_all_orders(self, grid384, fact384):
        for j in range(4):
            op = asm.assemble_Tj(grid384, fact384, j)
            M = op.matrix
            assert np.abs(M - M.conj().T).max() <= 1e-10 * np.abs(M).max()

    def test_constant_profile_rank_two(self, grid384, fact384):
        # the order-1 kernel is a constant matrix of rank 1 sandwiched
        # between two copies of v, so the collapsed operator has rank
        # at most 2; diagonal ball cells reproduce constants exactly,
        # otherwise the diagonal would leak rank
        T1 = asm.assemble_Tj(grid384, fact384, 1)
        sv = np.linalg.svd(T1.matrix, compute_uv=False)
        assert sv[2] <= 1e-8 * sv[0]

    def test_zero_potential_collapses_to_involution(self):
        grid = build("tensor-gauss-radial", 96, 6.0)
        fact = asm.sample_potential(asm.PotentialSpec.scalar(6.0, 0.0), grid)
        T0 = asm.assemble_Tj(grid, fact, 0)
        assert np.abs(T0.matrix - np.eye(4 * grid.n_points)).max() <= 1e-14
        M = asm.assemble_M(grid, fact, 1e-3, "plus")
        assert np.abs(M.matrix - np.eye(4 * grid.n_points)).max() <= 1e-12
        assert np.isclose(np.linalg.cond(M.matrix), 1.0)

    def test_halfmap_left_factor(self, grid384, fact384, t0_384):
        # multiplying the potential-free half-sandwich by the v block
        # diagonal recovers the full sandwich (minus the involution)
        H0 = asm.assemble_profile_halfmap(grid384, fact384, 0)
        n = grid384.n_points
        vb = np.zeros((4 * n, 4 * n), dtype=np.complex128)
        idx = np.arange(n)
        vb.reshape(n, 4, n, 4)[idx, :, idx, :] = fact384.vblocks
        lhs = vb @ H0.matrix
        rhs = t0_384.matrix - fact384.involution_blockdiag()
        assert np.abs(lhs - rhs).max() <= 1e-12 * np.abs(rhs).max()

    def test_threads_bitwise_identical(self, grid384, fact384):
        a = asm.assemble_Tj(grid384, fact384, 2, threads=1)
        b = asm.assemble_Tj(grid384, fact384, 2, threads=4)
        assert np.array_equal(a.matrix, b.matrix)
        c = asm.assemble_M(grid384, fact384, 2e-3, "plus", threads=1)
        d = asm.assemble_M(grid384, fact384, 2e-3, "plus", threads=4)
        assert np.array_equal(c.matrix, d.matrix)

    def test_cubic_amplitude_default(self, grid384, fact384):
        base = asm.assemble_Tj(grid384, fact384, 3)
        explicit = asm.assemble_Tj(
            grid384, fact384, 3, c2=kn.exact_coefficients().c2
        )
        assert np.array_equal(base.matrix, explicit.matrix)

    def test_labels_and_metadata(self, grid384, fact384, t0_384):
        assert t0_384.label == "T0"
        assert t0_384.z is None
        M = asm.assemble_M(grid384, fact384, 4e-3, "minus")
        assert M.label == "birman-schwinger"
        assert M.z == 4e-3
        assert M.branch == kn.BranchSign.MINUS

    def test_validation(self, grid384, fact384):
        with pytest.raises(ValueError):
            asm.assemble_Tj(grid384, fact384, 5)
        with pytest.raises(ValueError):
            asm.assemble_Tj(grid384, fact384, 0, mass=0.0)
        with pytest.raises(ValueError):
            asm.assemble_M(grid384, fact384, -1e-3, "plus")


def _identity_sides(spec, recipe, extent=14.0, n=1152):
    """Both sides of the quadratic-profile identity on the frozen grid.

    The composed side assembles the potential-free static half-map and
    squares it; its quadrature error is controlled by how isotropic the
    cells are at the density's scale, which caps the usable shell count:
    past ~24 shells the radial spacing outruns the fixed angular
    resolution and the composition drifts (measured +30% at 41 shells).
    The configuration here keeps every tested potential and density
    within 2% of the continuum value, against a 5% gate.
    """
    grid = build("tensor-gauss-radial", n, extent)
    fact = asm.sample_potential(spec, grid)
    x = grid.nodes
    s2 = np.sum(x * x, axis=1)
    c = np.zeros((grid.n_points, 4), dtype=np.complex128)
    if recipe == "radial-lower":
        c[:, 2] = np.exp(-0.35 * s2)
    else:
        c[:, 0] = np.exp(-0.35 * s2)
        c[:, 1] = (x[:, 1] + 0.3) * np.exp(-0.5 * s2)
        c[:, 2] = np.exp(-0.25 * s2) * (1.0 + 0.2 * x[:, 0])
        c[:, 3] = np.exp(-0.4 * s2) * (0.5 - 0.1 * x[:, 2])
    phi = (np.sqrt(grid.weights)[:, None] * c).ravel()
    # project the upper-component moment of v* phi to zero: the
    # identity needs it, and exact columns beat an SVD of the big
    # constant-profile matrix
    sv = fact.weighted_vblocks()
    cols = np.stack([sv[:, :, 0].ravel(), sv[:, :, 1].ravel()], axis=1)
    q, _ = np.linalg.qr(cols)
    phi = phi - q @ (q.conj().T @ phi)
    T2 = asm.assemble_Tj(grid, fact, 2)
    lhs = float(np.real(np.vdot(phi, T2.matrix @ phi)))
    del T2
    H0 = asm.assemble_profile_halfmap(grid, fact, 0)
    comp = float(np.linalg.norm(H0.matrix @ phi) ** 2)
    del H0
    return lhs, comp


class TestQuadraticProfileIdentity:
    def test_scalar_inverse_power(self):
        lhs, comp = _identity_sides(
            asm.PotentialSpec.scalar(6.0, -1.0), "generic"
        )
        assert lhs < 0.0
        assert abs(lhs / (-0.5 * comp) - 1.0) <= 0.05

    def test_scalar_gaussian(self):
        lhs, comp = _identity_sides(
            asm.PotentialSpec.scalar(2.0, -1.5, profile="gaussian"), "generic"
        )
        assert lhs < 0.0
        assert abs(lhs / (-0.5 * comp) - 1.0) <= 0.05

    def test_matrix_direction(self):
        D = np.array(
            [
                [1.0, 0.2, 0.0, 0.0],
                [0.2, 0.8, 0.0, 0.0],
                [0.0, 0.0, 1.0, 0.1],
                [0.0, 0.0, 0.1, 0.9],
            ]
        )
        spec = asm.PotentialSpec(
            profile="inverse-power", delta=6.5, amplitude=-0.8, direction=D
        )
        lhs, comp = _identity_sides(spec, "generic")
        assert lhs < 0.0
        assert abs(lhs / (-0.5 * comp) - 1.0) <= 0.05

    def test_against_continuum_reference(self):
        # for the radial lower-spinor density both sides have an exact
        # continuum value (frozen at module top); this pins absolute
        # accuracy, not just mutual consistency of the two assemblies
        lhs, comp = _identity_sides(
            asm.PotentialSpec.scalar(6.0, -1.0), "radial-lower"
        )
        assert abs(comp / NORM_G0_REF - 1.0) <= 0.05
        assert abs(lhs / (-0.5 * NORM_G0_REF) - 1.0) <= 0.05


class TestAssembleM:
    def test_static_gap_slope(self, grid384, fact384, t0_384):
        # || M(z) - T0 || is dominated by the z^2 log z coefficient, so
        # the log-log slope sits just below 2
        zs = np.geomspace(1e-4, 1e-2, 7)
        gap = [
            np.linalg.norm(
                asm.assemble_M(grid384, fact384, z, "plus").matrix
                - t0_384.matrix,
                2,
            )
            for z in zs
        ]
        slope = np.polyfit(np.log(zs), np.log(gap), 1)[0]
        assert 1.7 <= slope <= 2.1

    def test_branches_are_adjoint(self, grid384, fact384):
        Mp = asm.assemble_M(grid384, fact384, 3e-3, "plus")
        Mm = asm.assemble_M(grid384, fact384, 3e-3, "minus")
        assert np.abs(Mm.matrix - Mp.matrix.conj().T).max() <= 1e-10

    def test_quadratic_coefficient_sign_and_order(self, grid384, fact384, t0_384):
        # subtracting T0 + g1(z) T1 + z^2 T2 with these signs must leave
        # a remainder of order z^4 log z (slope near 4); any sign flip
        # in the z^2 block would knock the slope back to 2.  This is
        # the dense-matrix validation of the quadratic profile's sign.
        T1 = asm.assemble_Tj(grid384, fact384, 1)
        T2 = asm.assemble_Tj(grid384, fact384, 2)
        zs = np.geomspace(1e-4, 1e-2, 7)
        rem = []
        for z in zs:
            M = asm.assemble_M(grid384, fact384, z, "plus")
            R = (
                M.matrix
                - t0_384.matrix
                - kn.dirac_g1(z, "plus") * T1.matrix
                - z * z * T2.matrix
            )
            rem.append(np.linalg.norm(R, 2))
        slope = np.polyfit(np.log(zs), np.log(rem), 1)[0]
        assert slope > 3.0

    def test_low_eigenvalue_stable_under_refinement(self, t0_384):
        grid = build("tensor-gauss-radial", 768, 10.0)
        fact = asm.sample_potential(asm.PotentialSpec.scalar(6.0, -1.0), grid)
        T0b = asm.assemble_Tj(grid, fact, 0)
        e1 = np.linalg.eigvalsh(t0_384.matrix)
        e2 = np.linalg.eigvalsh(T0b.matrix)
        lo1 = e1[np.argmin(np.abs(e1))]
        lo2 = e2[np.argmin(np.abs(e2))]
        assert abs(lo2 - lo1) <= 0.05 * abs(lo1)


class TestAbsoluteBound:
    def test_diagonal_matrix(self):
        grid = build("quasi-random", 16, 4.0, seed=1)
        diag = RNG.normal(size=64) + 1j * RNG.normal(size=64)
        op = asm.DiscreteOperator(
            matrix=np.diag(diag), grid=grid, label="diag-test"
        )
        assert np.isclose(asm.absolute_bound(op), np.abs(diag).max())

    def test_dominates_operator_norm(self):
        grid = build("quasi-random", 16, 4.0, seed=1)
        A = RNG.normal(size=(64, 64)) + 1j * RNG.normal(size=(64, 64))
        op = asm.DiscreteOperator(matrix=A, grid=grid, label="random-test")
        assert asm.absolute_bound(op) >= np.linalg.norm(A, 2) - 1e-9

    def test_matches_dense_svd_of_entrywise_abs(self):
        grid = build("quasi-random", 16, 4.0, seed=2)
        A = RNG.normal(size=(64, 64)) + 1j * RNG.normal(size=(64, 64))
        op = asm.DiscreteOperator(matrix=A, grid=grid, label="svd-test")
        want = np.linalg.svd(np.abs(A), compute_uv=False)[0]
        assert abs(asm.absolute_bound(op) - want) <= 1e-8 * want

    def test_stable_under_grid_doubling(self):
        spec = asm.PotentialSpec.scalar(6.0, -1.0)
        vals = []
        for n in (384, 768):
            grid = build("tensor-gauss-radial", n, 14.0)
            fact = asm.sample_potential(spec, grid)
            vals.append(asm.absolute_bound(asm.assemble_Tj(grid, fact, 0)))
        assert abs(vals[1] - vals[0]) <= 0.10 * vals[0]
