"""Spatial operator E^2, its eigenmodes, and mode projections.

Discretization
--------------
On Dirichlet interior nodes the operator is ``E2 = W^-1 S`` with

    S = G^T Q^-1 G + diag(2 N sqrt(h) U),   G = diag(sqrt(a)) D,
    Q = I - (dx^2 / 12) D D^T,              a = N / sqrt(h) at midpoints,
    W = diag(sqrt(h) / N).

``D`` is the node-to-midpoint difference quotient. ``S`` is symmetric, so E2
is self-adjoint in the trapezoid inner product to rounding. For a flat
background ``G^T Q^-1 G = M^-1 (-Lap)`` with ``M`` the Numerov mass stencil
``[1, 10, 1] / 12``; eigenvalues are then fourth-order accurate and the
eigenvectors obey a three-term recurrence, so their tails carry no parasitic
components.
"""
import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceFailure, GridMismatch, NonPositive, ShapeMismatch
from .geometry import weighted_inner_product


@dataclass(frozen=True)
class E2Operator:
    grid: object
    background: object
    potential: object
    G: sp.csr_matrix = field(repr=False)
    Q: sp.csc_matrix = field(repr=False)
    q: np.ndarray = field(repr=False)
    w: np.ndarray = field(repr=False)

    @property
    def n_interior(self):
        return self.grid.n_points - 2

    def _q_solve(self, y):
        # Q is symmetric positive definite tridiagonal
        Qd = self.Q
        ab = np.zeros((2, Qd.shape[0]))
        ab[1] = Qd.diagonal()
        ab[0, 1:] = Qd.diagonal(1)
        return sla.solveh_banded(ab, y)

    def stiffness_apply(self, v):
        """S v on interior values."""
        return self.G.T @ self._q_solve(self.G @ v) + self.q * v

    def apply(self, f):
        """E^2 f for a full-grid sample vector; boundary entries are returned as 0."""
        f = np.asarray(f, dtype=float)
        if f.shape[0] != self.grid.n_points:
            raise ShapeMismatch("sample count does not match grid")
        out = np.zeros_like(f)
        out[1:-1] = (self.stiffness_apply(f[1:-1]).T / self.w).T if f.ndim > 1 else self.stiffness_apply(f[1:-1]) / self.w
        return out

    def stiffness_dense(self):
        Gd = self.G.toarray()
        return Gd.T @ np.linalg.solve(self.Q.toarray(), Gd) + np.diag(self.q)

    def to_dense(self):
        """Dense interior matrix of E^2 (not symmetric unless W is constant)."""
        return self.stiffness_dense() / self.w[:, None]

    def scale(self):
        """Rough operator magnitude, used to set relative tolerances."""
        return 4.0 / self.grid.spacing**2 * np.max(self.background.lapse**2 / self.background.metric) + np.max(
            np.abs(self.q / self.w)
        )

    def augmented(self, shift):
        """Sparse matrix whose solve applies (S - shift W)^-1 without forming Q^-1."""
        return sp.bmat(
            [[self.Q, -self.G], [self.G.T, sp.diags(self.q - shift * self.w)]], format="csc"
        )


def assemble_E2(grid, bg, pot, check_confinement=True):
    """Assemble the discrete E^2 operator.

    Parameters
    ----------
    grid : Grid1D
    bg : SpacetimeBackground
    pot : Potential
    check_confinement : bool
        Apply the endpoint confinement gate (raises ``NotConfining``). Turn it
        off only for deliberately non-confining test problems such as a flat
        box.
    """
    if not (bg.grid.same_as(grid) and pot.grid.same_as(grid)):
        raise GridMismatch("background, potential and grid must share one grid")
    if check_confinement:
        pot.check_confining()
    n = grid.n_points
    dx = grid.spacing
    m, ni = n - 1, n - 2
    # D: interior node j (full index j+1) -> midpoints j (left) and j+1 (right)
    j = np.arange(ni)
    D = sp.csr_matrix(
        (np.concatenate([np.full(ni, 1.0 / dx), np.full(ni, -1.0 / dx)]), (np.concatenate([j, j + 1]), np.concatenate([j, j]))),
        shape=(m, ni),
    )
    a_node = bg.lapse / np.sqrt(bg.metric)
    a_mid = 0.5 * (a_node[1:] + a_node[:-1])
    G = (sp.diags(np.sqrt(a_mid)) @ D).tocsr()
    Q = (sp.identity(m) - (dx * dx / 12.0) * (D @ D.T)).tocsc()
    q = (2.0 * bg.lapse * np.sqrt(bg.metric) * pot.values)[1:-1]
    w = bg.weight[1:-1]
    return E2Operator(grid, bg, pot, G, Q, q, w)


@dataclass(frozen=True)
class ModeBasis:
    """Eigenpairs (omega_n^2, v_n) of E^2, orthonormal in the weighted inner product.

    ``modes`` has shape ``(n_points, k)`` and includes the zero boundary rows.
    """

    omega_sq: np.ndarray
    modes: np.ndarray = field(repr=False)
    background: object = field(repr=False)
    grid: object = field(repr=False)

    def __post_init__(self):
        for name in ("omega_sq", "modes"):
            a = np.array(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    def __len__(self):
        return self.omega_sq.shape[0]

    @property
    def omegas(self):
        return np.sqrt(self.omega_sq)

    def gram(self):
        w = self.grid.trapezoid_weights() * self.background.weight
        return self.modes.T @ (w[:, None] * self.modes)

    def coefficients(self, f):
        w = self.grid.trapezoid_weights() * self.background.weight
        return self.modes.T @ (w * np.asarray(f, dtype=float))

    def truncated(self, k):
        return ModeBasis(self.omega_sq[:k], self.modes[:, :k], self.background, self.grid)

    def to_csv(self, path):
        """Columns x, v_0(x), ...; first row holds the omega^2 values."""
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["x"] + [f"v_{n}" for n in range(len(self))])
            wr.writerow(["omega_sq"] + [f"{v:.17g}" for v in self.omega_sq])
            for x, row in zip(self.grid.points, self.modes):
                wr.writerow([f"{x:.17g}"] + [f"{v:.17g}" for v in row])


def _fix_sign(v):
    i = np.argmax(np.abs(v))
    return -v if v[i] < 0 else v


def solve_modes(E2, k_max, refine_steps=2):
    """Lowest ``k_max`` eigenpairs of E^2, normalized to (v_n, v_n) = 1.

    Eigenvalues come from shift-invert Lanczos on the symmetric pencil (S, W);
    each eigenvector is then polished by inverse iteration at its own
    eigenvalue, which keeps exponentially small tails accurate in a relative
    sense (needed for well-overlap estimates). Sign convention: positive at
    the leftmost point of maximal modulus.

    Raises
    ------
    NonPositive
        If any retained eigenvalue is <= 0.
    ConvergenceFailure
        If the eigensolver does not converge.
    """
    ni = E2.n_interior
    if not 1 <= k_max <= ni:
        raise ValueError(f"k_max must lie in [1, {ni}], got {k_max}")
    m = E2.G.shape[0]
    lower = float(np.min(E2.q / E2.w))
    shift = lower - 0.1 * (1.0 + abs(lower))

    if k_max >= ni - 1 or ni <= 400:
        vals, vecs = sla.eigh(E2.stiffness_dense(), np.diag(E2.w), subset_by_index=(0, k_max - 1))
    else:
        lu = spla.splu(E2.augmented(shift))
        zeros = np.zeros(m)

        def opinv(b):
            return lu.solve(np.concatenate([zeros, b]))[m:]

        S = spla.LinearOperator((ni, ni), matvec=E2.stiffness_apply, dtype=float)
        OP = spla.LinearOperator((ni, ni), matvec=opinv, dtype=float)
        try:
            vals, vecs = spla.eigsh(
                S, k=k_max, M=sp.diags(E2.w), sigma=shift, OPinv=OP, which="LM", tol=0.0,
                ncv=min(ni, max(2 * k_max + 1, 40)),
                # fixed start vector: ARPACK's own is drawn from process-global state
                v0=np.random.default_rng(0).standard_normal(ni),
            )
        except spla.ArpackNoConvergence as exc:
            raise ConvergenceFailure(str(exc)) from exc
    order = np.argsort(vals, kind="stable")
    vals = np.asarray(vals)[order]
    vecs = np.asarray(vecs)[:, order]

    dx = E2.grid.spacing
    for n in range(k_max):
        mu = vals[n]
        y = vecs[:, n]
        if refine_steps:
            lu = spla.splu(E2.augmented(mu + 1e-13 * max(1.0, abs(mu))))
            zeros = np.zeros(m)
            for _ in range(refine_steps):
                y = lu.solve(np.concatenate([zeros, E2.w * y]))[m:]
                y /= np.sqrt(dx * np.sum(E2.w * y * y))
            vals[n] = (y @ E2.stiffness_apply(y)) / (y @ (E2.w * y))
        vecs[:, n] = y / np.sqrt(dx * np.sum(E2.w * y * y))

    # near-degenerate clusters can lose orthogonality under polishing
    gram = dx * vecs.T @ (E2.w[:, None] * vecs)
    if np.max(np.abs(gram - np.eye(k_max))) > 1e-11:
        evals, evecs = np.linalg.eigh(gram)
        vecs = vecs @ (evecs @ np.diag(evals**-0.5) @ evecs.T)

    if np.any(vals <= 0):
        bad = int(np.argmax(vals <= 0))
        raise NonPositive(f"E^2 eigenvalue omega_{bad}^2 = {vals[bad]:.6g} is not positive")

    modes = np.zeros((E2.grid.n_points, k_max))
    for n in range(k_max):
        modes[1:-1, n] = _fix_sign(vecs[:, n])
    return ModeBasis(vals, modes, E2.background, E2.grid)


def resolution_residual(basis, f):
    """Sup-norm residual of the truncated completeness expansion of ``f``."""
    f = np.asarray(f, dtype=float)
    if f.shape[0] != basis.grid.n_points:
        raise ShapeMismatch("sample count does not match grid")
    approx = basis.modes @ basis.coefficients(f)
    return np.max(np.abs(f - approx)) / np.max(np.abs(f))


def mode_overlap(basis_a, basis_b):
    """O_nm = (v_n^A, v_m^B) in the weighted inner product."""
    if not basis_a.background.same_as(basis_b.background):
        raise GridMismatch("bases are defined on different grids or backgrounds")
    w = basis_a.grid.trapezoid_weights() * basis_a.background.weight
    return basis_a.modes.T @ (w[:, None] * basis_b.modes)


@dataclass(frozen=True)
class CouplingMatrix:
    """g[n, k] = integral of N sqrt(h) v_n sigma u_k dx."""

    g: np.ndarray

    @property
    def shape(self):
        return self.g.shape

    def rows(self, idx):
        return CouplingMatrix(self.g[list(idx)])


def project_smearing(sigma, basis, box):
    """Spatial coupling factors between probe modes and boxed field modes."""
    grid = basis.grid
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape[0] != grid.n_points:
        raise GridMismatch("smearing profile is not sampled on the probe grid")
    if not box.contains(grid.points):
        raise GridMismatch("probe grid is not inside the field box")
    u = box.mode_functions(grid.points)
    w = grid.trapezoid_weights() * basis.background.volume_density * sigma
    return CouplingMatrix(basis.modes.T @ (w[:, None] * u))


def mode_profile_projection(profile, grid, box):
    """Trapezoid projections of an arbitrary spatial profile onto the box modes."""
    u = box.mode_functions(grid.points)
    return (grid.trapezoid_weights() * np.asarray(profile, float)) @ u


__all__ = [
    "E2Operator",
    "ModeBasis",
    "CouplingMatrix",
    "assemble_E2",
    "solve_modes",
    "resolution_residual",
    "mode_overlap",
    "project_smearing",
    "mode_profile_projection",
    "weighted_inner_product",
]
