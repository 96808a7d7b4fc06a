"""Gaussian states of coupled oscillators and their exact dynamics.

Conventions: hbar = 1, quadratures ordered (phi_1, pi_1, ..., phi_M, pi_M),
vacuum covariance of a unit-frequency mode is I/2, natural logarithms.
"""
import csv
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import BadPartition, NonPositiveFrequency, UncertaintyViolated, UnknownLabel

UNCERTAINTY_TOL = 1e-6


def symplectic_form(n_modes):
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


@dataclass(frozen=True)
class SymplecticState:
    mean: np.ndarray
    cov: np.ndarray = field(repr=False)
    labels: tuple

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float)
        cov = np.array(self.cov, dtype=float)
        labels = tuple(self.labels)
        if mean.shape != (2 * len(labels),) or cov.shape != (2 * len(labels),) * 2:
            raise ValueError("mean/cov dimensions do not match the number of labels")
        if len(set(labels)) != len(labels):
            raise ValueError("mode labels must be unique")
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "labels", labels)

    @property
    def n_modes(self):
        return len(self.labels)

    def index(self, label):
        try:
            return self.labels.index(label)
        except ValueError:
            raise UnknownLabel(f"unknown mode label {label!r}") from None

    def block(self, label):
        i = self.index(label)
        return self.cov[2 * i : 2 * i + 2, 2 * i : 2 * i + 2]

    def to_csv(self, path):
        header = []
        for lab in self.labels:
            header += [f"phi:{lab}", f"pi:{lab}"]
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(header)
            for row in self.cov:
                wr.writerow([f"{v:.17g}" for v in row])


def vacuum_state(omegas, labels=None):
    """Product of Hamiltonian ground states, cov blocks diag(1/2w, w/2)."""
    om = np.atleast_1d(np.asarray(omegas, dtype=float))
    if np.any(~(om > 0)):
        raise NonPositiveFrequency(f"vacuum needs positive frequencies, got {om}")
    labels = tuple(range(om.size)) if labels is None else tuple(labels)
    cov = np.zeros((2 * om.size, 2 * om.size))
    cov[0::2, 0::2] = np.diag(0.5 / om)
    cov[1::2, 1::2] = np.diag(0.5 * om)
    return SymplecticState(np.zeros(2 * om.size), cov, labels)


def two_mode_squeezed_state(r, labels=("a", "b")):
    """Two-mode squeezed vacuum of unit-frequency modes."""
    c, s = np.cosh(2 * r), np.sinh(2 * r)
    z = np.diag([1.0, -1.0])
    cov = 0.5 * np.block([[c * np.eye(2), s * z], [s * z, c * np.eye(2)]])
    return SymplecticState(np.zeros(4), cov, labels)


@dataclass(frozen=True)
class QuadraticHamiltonian:
    """H(t) = sum_i (pi_i^2 + w_i^2 phi_i^2)/2 - lam chi(t) sum_{i<j} C_ij phi_i phi_j.

    ``coupling`` is the symmetric position-position matrix C (zero diagonal
    blocks within probe and field sets in practice). ``switching`` is a
    callable chi(t).
    """

    omegas: np.ndarray
    coupling: np.ndarray = field(repr=False)
    lam: float
    switching: object
    labels: tuple

    def __post_init__(self):
        om = np.asarray(self.omegas, dtype=float)
        C = np.asarray(self.coupling, dtype=float)
        if C.shape != (om.size, om.size):
            raise ValueError("coupling matrix shape does not match the mode count")
        if not np.array_equal(C, C.T):
            raise ValueError("coupling matrix must be symmetric")
        object.__setattr__(self, "omegas", om)
        object.__setattr__(self, "coupling", C)
        object.__setattr__(self, "labels", tuple(self.labels))

    def F(self, t):
        """Symmetric 2M x 2M Hessian of H at time t."""
        d = self.omegas.size
        F = np.zeros((2 * d, 2 * d))
        F[0::2, 0::2] = np.diag(self.omegas**2) - self.lam * float(self.switching(t)) * self.coupling
        F[1::2, 1::2] = np.eye(d)
        return F

    def sparse_coupling(self):
        rows, cols = np.nonzero(self.coupling)
        return rows.astype(np.int64), cols.astype(np.int64), self.coupling[rows, cols].copy()


def coupled_hamiltonian(probe_omegas, field_omegas, g, lam, switching, probe_labels=None):
    """Probe modes linearly coupled to field modes through g[n, k]."""
    probe_omegas = np.atleast_1d(np.asarray(probe_omegas, float))
    field_omegas = np.asarray(field_omegas, float)
    g = np.asarray(g, dtype=float).reshape(probe_omegas.size, field_omegas.size)
    n, k = g.shape
    C = np.zeros((n + k, n + k))
    C[:n, n:] = g
    C[n:, :n] = g.T
    if probe_labels is None:
        probe_labels = [f"probe{i}" for i in range(n)]
    labels = tuple(probe_labels) + tuple(f"field{j + 1}" for j in range(k))
    return QuadraticHamiltonian(np.concatenate([probe_omegas, field_omegas]), C, lam, switching, labels)


def default_steps(omegas, t_i, t_f, max_phase=0.05):
    """Smallest step count with max(w) * dt <= max_phase."""
    return max(1, int(np.ceil((t_f - t_i) * float(np.max(omegas)) / max_phase)))


def evolve(state, H, t_i, t_f, n_steps):
    """Propagate mean and covariance with fixed-step RK4.

    The covariance is advanced as a deviation from the input covariance, so
    rounding error scales with the change rather than the state itself; the
    RK4 stages are algebraically the same as for the covariance directly.

    Raises
    ------
    UncertaintyViolated
        If the result breaks cov + (i/2) Omega >= 0 by more than 1e-6.
    """
    if tuple(state.labels) != tuple(H.labels):
        raise ValueError("state and Hamiltonian use different mode orderings")
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    dt = (t_f - t_i) / n_steps
    t = np.linspace(t_i, t_f, 2 * n_steps + 1)
    lam_chi = H.lam * np.asarray(H.switching(t), dtype=float) if H.lam != 0 else np.zeros_like(t)
    rows, cols, vals = H.sparse_coupling()
    ref = np.array(state.cov)
    delta, mean = _backend.rk4_gaussian(
        ref, np.zeros_like(ref), np.array(state.mean), np.ascontiguousarray(H.omegas**2),
        rows, cols, vals, np.ascontiguousarray(lam_chi), float(dt),
    )
    cov = ref + delta
    cov = 0.5 * (cov + cov.T)
    out = SymplecticState(mean, cov, state.labels)
    low = min_uncertainty_eigenvalue(cov)
    if low < -UNCERTAINTY_TOL:
        raise UncertaintyViolated(
            f"uncertainty relation violated after evolution (min eigenvalue {low:.3g}); "
            "the time step is too coarse"
        )
    return out


def min_uncertainty_eigenvalue(cov):
    n = cov.shape[0] // 2
    return float(np.linalg.eigvalsh(cov + 0.5j * symplectic_form(n))[0])


def symplectic_eigenvalues(cov):
    n = cov.shape[0] // 2
    ev = np.abs(np.linalg.eigvals(1j * symplectic_form(n) @ cov))
    return np.sort(ev)[::2]


def partial_trace(state, keep):
    """Keep the listed modes, in the state's own ordering."""
    keep = list(keep)
    if not keep:
        raise UnknownLabel("keep must name at least one mode")
    idx = sorted({state.index(lab) for lab in keep})
    q = np.ravel([[2 * i, 2 * i + 1] for i in idx])
    return SymplecticState(state.mean[q], state.cov[np.ix_(q, q)], [state.labels[i] for i in idx])


def log_negativity(state, partition, floor=1e-12):
    """Logarithmic negativity between the two label groups of ``partition``.

    Modes outside the partition are traced out. Contributions
    -ln(2 nu) below ``floor`` are treated as rounding and dropped.
    """
    part_a, part_b = (list(p) for p in partition)
    if not part_a or not part_b or set(part_a) & set(part_b):
        raise BadPartition("partition needs two disjoint, nonempty label groups")
    for lab in part_a + part_b:
        if lab not in state.labels:
            raise BadPartition(f"label {lab!r} is not a mode of the state")
    sub = partial_trace(state, part_a + part_b)
    flip = np.ones(2 * sub.n_modes)
    for i, lab in enumerate(sub.labels):
        if lab in part_b:
            flip[2 * i + 1] = -1.0
    cov_pt = sub.cov * np.outer(flip, flip)
    terms = -np.log(2.0 * symplectic_eigenvalues(cov_pt))
    return float(np.sum(terms[terms > floor]))


@dataclass(frozen=True)
class SymplecticDiagnostics:
    symmetry_residual: float
    min_uncertainty_eigenvalue: float
    purities: np.ndarray

    @property
    def ok(self):
        return self.symmetry_residual < 1e-12 and self.min_uncertainty_eigenvalue >= -1e-9


def symplectic_check(state):
    cov = state.cov
    purities = np.array(
        [0.5 / np.sqrt(np.linalg.det(cov[2 * i : 2 * i + 2, 2 * i : 2 * i + 2])) for i in range(state.n_modes)]
    )
    return SymplecticDiagnostics(
        float(np.max(np.abs(cov - cov.T))), min_uncertainty_eigenvalue(cov), purities
    )
