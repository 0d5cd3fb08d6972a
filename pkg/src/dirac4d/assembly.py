"""Quadrature grids, sampled potentials, and dense Birman-Schwinger blocks.

The continuum objects are integral operators on R^4 with 4x4 matrix
kernels.  A quadrature rule (nodes ``x_i``, weights ``w_i``) collapses
an operator with kernel ``A(x, y)`` to the ``(4N) x (4N)`` matrix

    [ sqrt(w_i) A(x_i, x_k) sqrt(w_k) ]_{ik}

so Hermitian kernels become Hermitian matrices, L^2 inner products
become plain dot products, and multiplication operators enter as exact
block diagonals.  Diagonal cells, where the kernels are singular, are
replaced by the exact integral of the kernel over a ball whose volume
matches the cell weight, divided by that weight: the odd matrix part
integrates to zero by symmetry and the even part has a closed form, so
no singular value is ever evaluated numerically, and constant kernels
reproduce their point value exactly (which keeps the constant profile
operator at its true rank).

Two grid families:

* ``tensor-gauss-radial`` -- a graded Gauss-Legendre radial rule times
  a 48-point union of the regular 4-polytope vertex set and its dual,
  which is an exact degree-7 spherical design on the unit 3-sphere;
* ``quasi-random`` -- a scrambled Halton sequence pushed through exact
  inverse CDFs of the radial and angular densities, as a structure-free
  cross-check.

Potentials are matrix valued with a scalar spatial envelope,
``V(x) = c g(x) D`` with ``D`` Hermitian; :func:`sample_potential`
factors ``V = v* U v`` pointwise with ``v`` Hermitian PSD and ``U`` a
constant Hermitian involution, which is the shape the spectral
machinery downstream expects.
"""
import concurrent.futures
import dataclasses
import math

import numpy as np

from . import bessel, kernels
from ._backend import dirac_blocks, profile_blocks
from .algebra import standard_dirac_matrices
from .kernels import BranchSign

_PI = math.pi
_MATS = standard_dirac_matrices(1.0)
_IUC = 0.5 * (_MATS.beta + np.eye(4)).astype(np.complex128)
_I4 = np.eye(4, dtype=np.complex128)

GENERATORS = ("tensor-gauss-radial", "quasi-random")
PROFILES = ("inverse-power", "gaussian")


def _angular_design():
    """48 unit vectors forming an exact degree-7 spherical design on S^3.

    Union of the 24 vertices of the self-dual regular 4-polytope (all
    signed coordinate pairs, normalized) with the 24 vertices of its
    dual copy (signed coordinate axes plus the half-integer points).
    Equal weights integrate every polynomial of degree <= 7 exactly;
    degree 8 fails, which the grid tests pin from both sides.
    """
    verts = []
    for i in range(4):
        for k in range(i + 1, 4):
            for si in (1.0, -1.0):
                for sk in (1.0, -1.0):
                    p = np.zeros(4)
                    p[i], p[k] = si, sk
                    verts.append(p / math.sqrt(2.0))
    for i in range(4):
        for si in (1.0, -1.0):
            p = np.zeros(4)
            p[i] = si
            verts.append(p)
    for signs in np.ndindex(2, 2, 2, 2):
        verts.append(np.array([0.5 if s == 0 else -0.5 for s in signs]))
    return np.array(verts)


_ANGULAR = _angular_design()


def _shell_rotation_step():
    """A fixed generic rotation applied cumulatively to successive shells.

    Rotating each radial shell keeps its exact spherical-design property
    (designs are rotation invariant) but removes shared rays between
    shells: same-ray node pairs at nearby radii would make the
    quadrature of the ``1/|x-y|^3``-singular kernels diverge under
    radial refinement.  Golden-angle increments in two orthogonal
    planes, conjugated away from the vertex axes, never recur.
    """
    gold = (math.sqrt(5.0) - 1.0) / 2.0
    th1 = 2.0 * math.pi * gold
    th2 = 2.0 * math.pi * gold * gold
    block = np.zeros((4, 4))
    block[:2, :2] = [[math.cos(th1), -math.sin(th1)], [math.sin(th1), math.cos(th1)]]
    block[2:, 2:] = [[math.cos(th2), -math.sin(th2)], [math.sin(th2), math.cos(th2)]]
    seed_mat = np.array(
        [
            [0.9, 0.2, -0.4, 0.1],
            [-0.3, 0.8, 0.5, -0.2],
            [0.1, -0.5, 0.7, 0.6],
            [0.4, 0.1, -0.2, 0.9],
        ]
    )
    conj, _ = np.linalg.qr(seed_mat)
    return conj @ block @ conj.T


_SHELL_STEP = _shell_rotation_step()

# inverse CDF table for the polar angle density sin^2(psi) on [0, pi]
_PSI_TABLE = np.linspace(0.0, _PI, 4097)
_PSI_CDF = (_PSI_TABLE - np.sin(_PSI_TABLE) * np.cos(_PSI_TABLE)) / _PI


@dataclasses.dataclass(frozen=True)
class QuadratureGrid:
    """Nodes and positive weights of a quadrature rule on a 4-ball.

    ``extent`` is the ball radius; the total weight equals the ball
    volume ``pi^2 extent^4 / 2`` -- exactly for the tensor family,
    to low-discrepancy accuracy for the quasi-random one.
    """

    nodes: np.ndarray
    weights: np.ndarray
    generator: str
    seed: int | None
    extent: float

    def __post_init__(self):
        nodes = np.ascontiguousarray(self.nodes, dtype=np.float64)
        weights = np.ascontiguousarray(self.weights, dtype=np.float64)
        if nodes.ndim != 2 or nodes.shape[1] != 4:
            raise ValueError("nodes must have shape (N, 4)")
        if weights.shape != (nodes.shape[0],):
            raise ValueError("weights must have shape (N,)")
        if not (np.all(np.isfinite(nodes)) and np.all(np.isfinite(weights))):
            raise ValueError("grid data must be finite")
        if np.any(weights <= 0.0):
            raise ValueError("weights must be positive")
        if self.generator not in GENERATORS:
            raise ValueError(f"unknown generator {self.generator!r}")
        if not self.extent > 0.0:
            raise ValueError("extent must be positive")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "extent", float(self.extent))

    @property
    def n_points(self):
        return self.nodes.shape[0]

    def cell_radii(self):
        """Radius of the volume-matched ball for each cell.

        ``pi^2 h^4 / 2 = w`` makes the analytic diagonal treatment exact
        for constant kernels, so smooth profile operators keep the rank
        and value they would have under plain point evaluation.
        """
        return (2.0 * self.weights / _PI**2) ** 0.25

    def integrate(self, values):
        """Plain quadrature sum of scalar samples at the nodes."""
        values = np.asarray(values)
        if values.shape != (self.n_points,):
            raise ValueError("need one sample per node")
        return float(np.real_if_close(np.sum(self.weights * values)))


def build_grid(generator, n_points, extent, *, seed=None, grading=2.0):
    """Construct a quadrature rule covering the ball of radius ``extent``.

    ``grading`` steepens the radial map ``r = extent * t**grading`` so
    nodes cluster near the origin where the kernels vary fastest.  The
    tensor generator rounds ``n_points`` to a multiple of 48 (one
    rotated design shell per radius) and never uses fewer than
    ``ceil(2 * grading)`` shells, which makes the radial rule exact for
    the volume element whenever ``4 * grading`` is an integer; the
    quasi-random one honors ``n_points`` exactly and uses ``seed`` for
    the scramble.
    """
    if generator not in GENERATORS:
        raise ValueError(f"unknown generator {generator!r}")
    n_points = int(n_points)
    if n_points < 16:
        raise ValueError("grids below 16 points resolve nothing")
    if not extent > 0.0:
        raise ValueError("extent must be positive")
    if not grading >= 1.0:
        raise ValueError("grading below 1 piles nodes on the rim")

    if generator == "tensor-gauss-radial":
        n_shells = max(
            int(round(n_points / _ANGULAR.shape[0])),
            int(math.ceil(2.0 * grading)),
        )
        t, gw = np.polynomial.legendre.leggauss(n_shells)
        t = 0.5 * (t + 1.0)
        gw = 0.5 * gw
        r = extent * t**grading
        jac = extent * grading * t ** (grading - 1.0)
        shell_w = gw * jac * r**3 * (2.0 * _PI**2 / _ANGULAR.shape[0])
        nodes = np.empty((n_shells, _ANGULAR.shape[0], 4))
        spin = np.eye(4)
        for shell in range(n_shells):
            nodes[shell] = r[shell] * (_ANGULAR @ spin.T)
            spin = spin @ _SHELL_STEP
        nodes = nodes.reshape(-1, 4)
        weights = np.repeat(shell_w, _ANGULAR.shape[0])
        return QuadratureGrid(nodes, weights, generator, seed, extent)

    from scipy.stats import qmc

    sampler = qmc.Halton(d=4, scramble=True, seed=seed)
    u = sampler.random(n_points)
    u0 = np.clip(u[:, 0], 1e-12, 1.0)
    expo = grading / 4.0
    r = extent * u0**expo
    radial_jac = extent * expo * u0 ** (expo - 1.0)
    weights = (2.0 * _PI**2 / n_points) * r**3 * radial_jac
    psi = np.interp(u[:, 1], _PSI_CDF, _PSI_TABLE)
    costh = 1.0 - 2.0 * u[:, 2]
    sinth = np.sqrt(np.maximum(0.0, 1.0 - costh**2))
    phi = 2.0 * _PI * u[:, 3]
    direction = np.stack(
        [
            np.cos(psi),
            np.sin(psi) * costh,
            np.sin(psi) * sinth * np.cos(phi),
            np.sin(psi) * sinth * np.sin(phi),
        ],
        axis=1,
    )
    nodes = r[:, None] * direction
    return QuadratureGrid(nodes, weights, generator, seed, extent)


@dataclasses.dataclass(frozen=True)
class PotentialSpec:
    """Matrix potential ``V(x) = amplitude * envelope(x) * direction``.

    The envelope decays at least like ``<x - center>^{-delta}``, so the
    entrywise bound ``|V(x)| <= |amplitude| |direction| <x>^{-delta}``
    holds; ``direction`` must be Hermitian.
    """

    profile: str
    delta: float
    amplitude: float
    direction: np.ndarray
    center: np.ndarray | None = None

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise ValueError(f"unknown envelope profile {self.profile!r}")
        if not self.delta > 0.0:
            raise ValueError("decay rate delta must be positive")
        if not np.isfinite(self.amplitude):
            raise ValueError("amplitude must be finite")
        direction = np.ascontiguousarray(self.direction, dtype=np.complex128)
        if direction.shape != (4, 4):
            raise ValueError("direction must be a 4x4 matrix")
        if not np.allclose(direction, direction.conj().T, atol=1e-12):
            raise ValueError("direction must be Hermitian")
        center = self.center
        center = np.zeros(4) if center is None else np.asarray(center, dtype=np.float64)
        if center.shape != (4,) or not np.all(np.isfinite(center)):
            raise ValueError("center must be a finite length-4 vector")
        direction.setflags(write=False)
        center.setflags(write=False)
        object.__setattr__(self, "direction", direction)
        object.__setattr__(self, "center", center)

    @classmethod
    def scalar(cls, delta, amplitude, *, profile="inverse-power", center=None):
        """Scalar coupling: the direction matrix is the identity."""
        return cls(profile, delta, amplitude, np.eye(4), center)

    def envelope(self, x):
        """Scalar spatial factor ``g >= 0`` at points of shape (..., 4)."""
        x = np.asarray(x, dtype=np.float64)
        s2 = np.sum((x - self.center) ** 2, axis=-1)
        if self.profile == "inverse-power":
            return (1.0 + s2) ** (-0.5 * self.delta)
        return np.exp(-0.5 * self.delta * s2)

    def matrix(self, x):
        """``V`` evaluated at points of shape (..., 4) -> (..., 4, 4)."""
        g = self.amplitude * self.envelope(x)
        return g[..., None, None] * self.direction


@dataclasses.dataclass(frozen=True)
class PointFactorization:
    """Pointwise factorization ``V = v* U v`` on a grid.

    ``vblocks[i]`` is the Hermitian PSD matrix ``v(x_i)`` and
    ``involution`` the Hermitian involution ``U`` -- one constant (4, 4)
    matrix for a single potential term, a per-node (N, 4, 4) stack for a
    sum of terms; either way ``vblocks[i] @ U_i @ vblocks[i]``
    reproduces ``V(x_i)`` to rounding.
    """

    grid: QuadratureGrid
    spec: PotentialSpec | tuple
    vblocks: np.ndarray
    involution: np.ndarray

    def weighted_vblocks(self):
        """``sqrt(w_i) v(x_i)`` stacked as (N, 4, 4)."""
        return np.sqrt(self.grid.weights)[:, None, None] * self.vblocks

    def involution_blockdiag(self):
        """``U`` down the diagonal as a dense (4N, 4N) matrix."""
        n = self.grid.n_points
        out = np.zeros((4 * n, 4 * n), dtype=np.complex128)
        idx = np.arange(n)
        out.reshape(n, 4, n, 4)[idx, :, idx, :] = np.broadcast_to(
            self.involution, (n, 4, 4)
        )
        return out


def sample_potential(spec, grid):
    """Factor the potential at the grid nodes.

    Eigendecomposing the direction matrix ``D = Q L Q*`` gives
    ``v(x) = sqrt(|c| g(x)) Q |L|^{1/2} Q*`` and
    ``U = sign(c) Q sgn(L) Q*``; zero eigenvalues take sign +1 so ``U``
    stays involutive, and zero amplitude gives ``v = 0`` with the
    identity involution.

    A sequence of specs is summed pointwise and factored node by node;
    the involution is then a per-node stack (the sum of two definite
    directions need not share an eigenbasis across nodes).
    """
    if isinstance(spec, (list, tuple)):
        return _sample_potential_sum(spec, grid)
    if not isinstance(spec, PotentialSpec):
        raise TypeError("spec must be a PotentialSpec")
    if spec.amplitude == 0.0:
        vblocks = np.zeros((grid.n_points, 4, 4), dtype=np.complex128)
        return PointFactorization(grid, spec, vblocks, np.eye(4, dtype=np.complex128))
    lam, q = np.linalg.eigh(spec.direction)
    signs = np.where(lam >= 0.0, 1.0, -1.0)
    root = (q * np.sqrt(np.abs(lam))[None, :]) @ q.conj().T
    invol = math.copysign(1.0, spec.amplitude) * (q * signs[None, :]) @ q.conj().T
    scale = np.sqrt(np.abs(spec.amplitude) * spec.envelope(grid.nodes))
    vblocks = scale[:, None, None] * root[None, :, :]
    return PointFactorization(grid, spec, vblocks, invol)


def _sample_potential_sum(specs, grid):
    """Pointwise factorization of a sum of potential terms."""
    if not specs or not all(isinstance(s, PotentialSpec) for s in specs):
        raise TypeError("spec sequence must hold PotentialSpec items")
    total = np.zeros((grid.n_points, 4, 4), dtype=np.complex128)
    for s in specs:
        total += (s.amplitude * s.envelope(grid.nodes))[:, None, None] * s.direction
    lam, q = np.linalg.eigh(total)
    signs = np.where(lam >= 0.0, 1.0, -1.0)
    vblocks = np.einsum("nab,nb,ncb->nac", q, np.sqrt(np.abs(lam)), q.conj())
    invol = np.einsum("nab,nb,ncb->nac", q, signs, q.conj())
    return PointFactorization(grid, tuple(specs), vblocks, invol)


@dataclasses.dataclass(frozen=True)
class DiscreteOperator:
    """A dense ``(4N) x (4N)`` matrix tied to its grid and spectral point."""

    matrix: np.ndarray
    grid: QuadratureGrid
    label: str
    z: float | None = None
    branch: BranchSign | None = None

    def __post_init__(self):
        matrix = np.ascontiguousarray(self.matrix, dtype=np.complex128)
        side = 4 * self.grid.n_points
        if matrix.shape != (side, side):
            raise ValueError("matrix must be (4N, 4N) for the grid's N")
        if not np.all(np.isfinite(matrix)):
            raise ValueError("matrix entries must be finite")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)


def _resolvent_ball(z, sign, m, h):
    """Exact integral of the free kernel over a radius-``h`` ball.

    The odd matrix part vanishes by symmetry.  The radial integral of
    the scalar factor has a closed form in which the singular parts of
    the two Bessel kinds cancel identically, leaving only regular
    series, so the value stays accurate down to ``z h -> 0`` where it
    reduces to the static even-part integral.
    """
    s = float(sign)
    j2, y2t = bessel.j2_y2_regular(z * h)
    fball = (-s * 0.25j * _PI) * h * h * (j2 + 1j * s * y2t)
    omega = math.hypot(z, m)
    diag = np.array([omega + m, omega + m, z * z / (omega + m), z * z / (omega + m)])
    return np.diag(diag).astype(complex) * fball


def _profile_ball(j, m, c2, h):
    """Exact integral of the order-``j`` profile over a radius-``h`` ball."""
    if j == 0:
        return (-0.5 * m * h * h) * _IUC
    if j == 1:
        return (0.25 * m * h**4) * _IUC
    if j == 2:
        even = (0.125 * m * h**4) * (math.log(h) - 0.25) * _IUC
        return -(0.125 * h * h / m) * _I4 + even
    # j == 3: only the even part m * c2 * r^2 survives the angular average
    return (2.0 * _PI**2 * m * c2 / 3.0) * h**6 * _IUC


def _run_rows(n, threads, fill):
    if threads <= 1:
        fill(np.arange(n))
        return
    chunks = np.array_split(np.arange(n), min(threads * 4, n))
    with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
        for _ in pool.map(fill, chunks):
            pass


def _assemble_pairwise(grid, left, right, block_fn, diag_fn, threads):
    """Dense ``[left_i K(x_i, x_k) right_k]`` with analytic diagonal cells.

    ``block_fn(d, r)`` evaluates the kernel at off-diagonal pairs;
    ``diag_fn(h)`` returns its exact integral over the volume-matched
    ball, which divided by the cell weight stands in for the singular
    self-interaction.  Rows are independent, so they parallelize over a
    thread pool (the kernel evaluators release the interpreter lock).
    """
    nodes = grid.nodes
    weights = grid.weights
    n = grid.n_points
    radii = grid.cell_radii()
    out = np.empty((4 * n, 4 * n), dtype=np.complex128)

    def fill(rows):
        for i in rows:
            d = nodes[i] - nodes
            r = np.linalg.norm(d, axis=1)
            keep = np.arange(n) != i
            blocks = np.empty((n, 4, 4), dtype=np.complex128)
            blocks[keep] = block_fn(d[keep], r[keep])
            blocks[i] = diag_fn(radii[i]) / weights[i]
            row = np.einsum("ab,kbc,kcd->kad", left[i], blocks, right, optimize=True)
            out[4 * i : 4 * i + 4] = row.transpose(1, 0, 2).reshape(4, 4 * n)

    _run_rows(n, threads, fill)
    return out


def _coerce_factorization(fact):
    if not isinstance(fact, PointFactorization):
        raise TypeError("expected a PointFactorization from sample_potential")
    return fact


def assemble_resolvent_operator(grid, fact, z, branch, *, mass=1.0, threads=1):
    """Weighted sandwich ``v R0(z) v*`` on one branch (no involution term)."""
    fact = _coerce_factorization(fact)
    sign = BranchSign.coerce(branch).sign
    z = float(z)
    if not 0.0 < z:
        raise ValueError("spectral parameter z must be positive")
    if not mass > 0.0:
        raise ValueError("mass must be positive")
    sv = np.ascontiguousarray(fact.weighted_vblocks())
    mat = _assemble_pairwise(
        grid,
        sv,
        sv,
        lambda d, r: dirac_blocks(z, sign, mass, d, r),
        lambda h: _resolvent_ball(z, sign, mass, h),
        threads,
    )
    tag = BranchSign.PLUS if sign > 0 else BranchSign.MINUS
    return DiscreteOperator(mat, grid, "resolvent-sandwich", z=z, branch=tag)


def assemble_M(grid, fact, z, branch, *, mass=1.0, threads=1):
    """Discrete Birman-Schwinger operator ``U + v R0(z) v*`` on one branch."""
    fact = _coerce_factorization(fact)
    res = assemble_resolvent_operator(grid, fact, z, branch, mass=mass, threads=threads)
    mat = res.matrix + fact.involution_blockdiag()
    return DiscreteOperator(mat, grid, "birman-schwinger", z=res.z, branch=res.branch)


def assemble_Tj(grid, fact, j, *, mass=1.0, c2=None, threads=1):
    """Expansion operator ``T_j = v G_j v*``; order 0 adds the involution.

    Orders: 0 static, 1 constant, 2 quadratic (log), 3 cubic.  Order 3
    needs the quadratic scalar amplitude ``c2`` and defaults to its
    exact series value.
    """
    fact = _coerce_factorization(fact)
    if j not in (0, 1, 2, 3):
        raise ValueError("profile order must be 0..3")
    if not mass > 0.0:
        raise ValueError("mass must be positive")
    if c2 is None:
        c2 = kernels.exact_coefficients().c2
    sv = np.ascontiguousarray(fact.weighted_vblocks())
    mat = _assemble_pairwise(
        grid,
        sv,
        sv,
        lambda d, r: profile_blocks(j, mass, c2, d, r),
        lambda h: _profile_ball(j, mass, c2, h),
        threads,
    )
    if j == 0:
        mat = mat + fact.involution_blockdiag()
    return DiscreteOperator(mat, grid, f"T{j}")


def assemble_profile_operator(grid, j, *, mass=1.0, c2=None, threads=1):
    """Full-space weighted kernel matrix ``[sqrt(w_i) G_j(x_i,x_k) sqrt(w_k)]``.

    No potential factors: this is the expansion kernel itself as an
    operator on the weighted discrete space, with the same ball-cell
    diagonal regularization as the sandwiched assemblies, so that
    ``v . G_j-operator . v  + U == T_j`` holds to rounding.
    """
    if j not in (0, 1, 2, 3):
        raise ValueError("profile order must be 0..3")
    if not mass > 0.0:
        raise ValueError("mass must be positive")
    if c2 is None:
        c2 = kernels.exact_coefficients().c2
    sqw = np.sqrt(grid.weights)
    left = np.ascontiguousarray(sqw[:, None, None] * _I4[None, :, :])
    mat = _assemble_pairwise(
        grid,
        left,
        left,
        lambda d, r: profile_blocks(j, mass, c2, d, r),
        lambda h: _profile_ball(j, mass, c2, h),
        threads,
    )
    return DiscreteOperator(mat, grid, f"G{j}-operator")


def assemble_profile_halfmap(grid, fact, j, *, mass=1.0, c2=None, threads=1):
    """One-sided map ``[sqrt(w_i) G_j(x_i, x_k) v(x_k) sqrt(w_k)]``.

    Applying it to a coefficient vector evaluates the kernel acting on
    the v-weighted density back on the grid, so quadratic-form
    identities involving ``G_j v* phi`` reduce to plain matrix algebra.
    """
    fact = _coerce_factorization(fact)
    if j not in (0, 1, 2, 3):
        raise ValueError("profile order must be 0..3")
    if not mass > 0.0:
        raise ValueError("mass must be positive")
    if c2 is None:
        c2 = kernels.exact_coefficients().c2
    sqw = np.sqrt(grid.weights)
    left = np.ascontiguousarray(sqw[:, None, None] * _I4[None, :, :])
    right = np.ascontiguousarray(fact.weighted_vblocks())
    mat = _assemble_pairwise(
        grid,
        left,
        right,
        lambda d, r: profile_blocks(j, mass, c2, d, r),
        lambda h: _profile_ball(j, mass, c2, h),
        threads,
    )
    return DiscreteOperator(mat, grid, f"G{j}-halfmap")


def absolute_bound(operator, *, tol=1e-12, max_iter=5000):
    """Largest singular value of the entrywise absolute value.

    Entrywise domination of kernels survives the weighted assembly, so
    this is the discrete stand-in for integral-kernel domination
    bounds; it always upper-bounds the spectral norm of the matrix
    itself.  Power iteration on ``|A|^T |A|`` from a deterministic
    positive start vector -- the iterate cannot be orthogonal to the
    Perron direction of a nonnegative matrix, so convergence is clean.
    """
    if isinstance(operator, DiscreteOperator):
        a = np.abs(operator.matrix)
    else:
        a = np.abs(np.ascontiguousarray(operator))
        if a.ndim != 2:
            raise ValueError("operator must be a matrix")
    n = a.shape[1]
    x = np.full(n, 1.0 / math.sqrt(n))
    sigma = 0.0
    for _ in range(max_iter):
        y = a @ x
        back = a.T @ y
        lam = float(x @ back)
        nrm = float(np.linalg.norm(back))
        if nrm == 0.0:
            return 0.0
        x = back / nrm
        new = math.sqrt(max(lam, 0.0))
        if abs(new - sigma) <= tol * max(new, 1e-300):
            return new
        sigma = new
    return sigma


__all__ = [
    "GENERATORS",
    "PROFILES",
    "QuadratureGrid",
    "PotentialSpec",
    "PointFactorization",
    "DiscreteOperator",
    "build_grid",
    "sample_potential",
    "assemble_resolvent_operator",
    "assemble_M",
    "assemble_Tj",
    "assemble_profile_halfmap",
    "absolute_bound",
]
