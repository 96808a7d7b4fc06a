"""Drivers for the reduction study, the double-well harvesting protocol and
the lapse (proper-time) rescaling."""
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateFit, NonPositiveLapse, OverlapGateFailed
from .field import FieldBox
from .gaussian import (
    coupled_hamiltonian,
    default_steps,
    evolve,
    log_negativity,
    SymplecticState,
    partial_trace,
    symplectic_check,
    symplectic_eigenvalues,
    vacuum_state,
)
from .geometry import Potential, SpacetimeBackground, harmonic_potential, make_grid, weighted_inner_product
from .kernels import second_order_detector_covariance, udw_response
from .modes import assemble_E2, mode_overlap, project_smearing, solve_modes
from .smearing import GaussianSwitching, time_grid

log = logging.getLogger(__name__)


# ---------------------------------------------------------------- scaling fit


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    intercept: float
    max_residual: float


def fit_scaling(distances, lambdas):
    """Least-squares slope of log(distance) against log(lambda)."""
    d = np.asarray(distances, dtype=float)
    lam = np.asarray(lambdas, dtype=float)
    if d.shape != lam.shape or d.size < 3:
        raise DegenerateFit("need at least three (lambda, distance) pairs")
    if np.any(~(d > 0)) or np.any(~(lam > 0)):
        raise DegenerateFit("distances and lambdas must be strictly positive")
    x, y = np.log(lam), np.log(d)
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = np.max(np.abs(y - (slope * x + intercept)))
    return ScalingFit(float(slope), float(intercept), float(resid))


# ---------------------------------------------------------------- profiles


def spatial_profile(profile, x):
    """sigma(x) from a small dict: uniform or gaussian."""
    kind = profile.get("kind", "uniform")
    amp = float(profile.get("amplitude", 1.0))
    if kind == "uniform":
        return np.full_like(x, amp)
    if kind == "gaussian":
        return amp * np.exp(-0.5 * ((x - profile.get("center", 0.0)) / profile["width"]) ** 2)
    raise ValueError(f"unknown spatial profile kind {kind!r}")


def _background(grid, lapse_curvature=0.0, center=0.0):
    if lapse_curvature == 0.0:
        return SpacetimeBackground.flat(grid)
    x = grid.points
    return SpacetimeBackground(grid, 1.0 + lapse_curvature * (x - center) ** 2, np.ones_like(x))


def _run_pool(fn, jobs, workers):
    if workers is None or workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, jobs))


# ---------------------------------------------------------------- reduction


@dataclass(frozen=True)
class ReductionConfig:
    probe_mass: float = 1.0
    probe_stiffness: float = 1.0
    x_min: float = -12.0
    x_max: float = 12.0
    n_points: int = 2001
    lapse_curvature: float = 0.0
    n_probe: int = 24
    detector_modes: tuple = (0,)
    box_length: float = 96.0
    field_mass: float = 1.0
    k_max_field: int = 64
    sigma: dict = field(default_factory=lambda: {"kind": "uniform", "amplitude": 1.0})
    switching_center: float = None
    switching_width: float = 1.0
    lambdas: tuple = (1e-3, 2e-3, 4e-3, 8e-3)
    t_i: float = 0.0
    t_f: float = None
    n_steps: int = None

    def __post_init__(self):
        if not set(self.detector_modes) <= set(range(self.n_probe)) or not self.detector_modes:
            raise ValueError("detector_modes must be a nonempty subset of range(n_probe)")
        lam = np.asarray(self.lambdas, float)
        if np.any(lam < 0) or np.any(np.diff(lam) <= 0):
            raise ValueError("lambdas must be non-negative and strictly ascending")

    def window(self, omega0):
        """Default window: five periods of the lowest detector mode."""
        t_f = self.t_f if self.t_f is not None else self.t_i + 5 * 2 * np.pi / omega0
        center = self.switching_center if self.switching_center is not None else 0.5 * (self.t_i + t_f)
        return t_f, GaussianSwitching(center, self.switching_width)


@dataclass
class ReductionSetup:
    cfg: ReductionConfig
    basis: object
    box: FieldBox
    g: np.ndarray
    sigma: np.ndarray
    switching: GaussianSwitching
    t_f: float
    n_steps: int


def prepare_reduction(cfg):
    grid = make_grid(cfg.x_min, cfg.x_max, cfg.n_points)
    bg = _background(grid, cfg.lapse_curvature)
    pot = harmonic_potential(grid, cfg.probe_mass, cfg.probe_stiffness)
    basis = solve_modes(assemble_E2(grid, bg, pot), cfg.n_probe)
    box = FieldBox.centered_on(grid, cfg.box_length, cfg.field_mass, cfg.k_max_field)
    sigma = spatial_profile(cfg.sigma, grid.points)
    g = project_smearing(sigma, basis, box).g
    omega0 = float(np.min(basis.omegas[list(cfg.detector_modes)]))
    t_f, switching = cfg.window(omega0)
    om_all = np.concatenate([basis.omegas, box.frequencies])
    n_steps = cfg.n_steps or default_steps(om_all, cfg.t_i, t_f)
    n_steps += n_steps % 2  # even, so time-grid quadratures can extrapolate
    return ReductionSetup(cfg, basis, box, g, sigma, switching, t_f, n_steps)


def _reduction_job(args):
    setup, lam = args
    cfg = setup.cfg
    A = list(cfg.detector_modes)
    labels_A = [f"probe{n}" for n in A]
    om_probe = setup.basis.omegas
    om_field = setup.box.frequencies

    H_full = coupled_hamiltonian(om_probe, om_field, setup.g, lam, setup.switching)
    H_udw = coupled_hamiltonian(om_probe[A], om_field, setup.g[A], lam, setup.switching, labels_A)
    s_full = evolve(vacuum_state(H_full.omegas, H_full.labels), H_full, cfg.t_i, setup.t_f, setup.n_steps)
    s_udw = evolve(vacuum_state(H_udw.omegas, H_udw.labels), H_udw, cfg.t_i, setup.t_f, setup.n_steps)
    red_full = partial_trace(s_full, labels_A)
    red_udw = partial_trace(s_udw, labels_A)
    diff = red_full.cov - red_udw.cov
    return {
        "lambda": lam,
        "max_distance": float(np.max(np.abs(diff))),
        "frobenius_distance": float(np.linalg.norm(diff)),
        "cov_full": red_full.cov,
        "cov_udw": red_udw.cov,
        "check_full": symplectic_check(s_full),
        "check_udw": symplectic_check(s_udw),
        "global_symplectic_spread": float(np.max(np.abs(symplectic_eigenvalues(s_full.cov) - 0.5))),
    }


@dataclass
class ReductionReport:
    lambdas: np.ndarray
    max_distance: np.ndarray
    frobenius_distance: np.ndarray
    fit: ScalingFit
    monotone: bool
    second_order_rel_diff: float
    excitation_number: float
    udw_excitation: float
    excitation_rel_diff: float
    omegas: np.ndarray
    n_steps: int
    runs: list = field(repr=False)

    def rows(self):
        for i, lam in enumerate(self.lambdas):
            r = self.runs[i]
            yield {
                "lambda": lam,
                "max_distance": self.max_distance[i],
                "frobenius_distance": self.frobenius_distance[i],
                "min_uncertainty_eig_full": r["check_full"].min_uncertainty_eigenvalue,
                "min_uncertainty_eig_udw": r["check_udw"].min_uncertainty_eigenvalue,
                "global_symplectic_spread": r["global_symplectic_spread"],
            }

    def summary(self):
        return {
            "fitted_slope": self.fit.slope,
            "fit_intercept": self.fit.intercept,
            "fit_max_residual": self.fit.max_residual,
            "monotone": bool(self.monotone),
            "second_order_rel_diff": self.second_order_rel_diff,
            "excitation_number_per_lambda2": self.excitation_number,
            "udw_response_excitation_per_lambda2": self.udw_excitation,
            "excitation_rel_diff": self.excitation_rel_diff,
            "n_steps": self.n_steps,
            "probe_omega_sq": [float(w * w) for w in self.omegas],
        }


def run_reduction(cfg, workers=1):
    """Compare the full probe field with the detector-only model, per lambda.

    For each lambda the full run evolves every probe mode plus the field and
    traces out everything except the detector modes; the detector run
    evolves only the detector modes plus the field with the same coupling
    rows. Distances between the two reduced covariances are then fitted on a
    log-log scale over the positive lambdas.
    """
    setup = prepare_reduction(cfg)
    runs = _run_pool(_reduction_job, [(setup, float(l)) for l in cfg.lambdas], workers)
    lam = np.array([r["lambda"] for r in runs])
    dmax = np.array([r["max_distance"] for r in runs])
    dfro = np.array([r["frobenius_distance"] for r in runs])
    pos = lam > 0
    fit = fit_scaling(dmax[pos], lam[pos])
    monotone = bool(np.all(np.diff(dmax[pos]) > 0))

    A = list(cfg.detector_modes)
    om0 = float(setup.basis.omegas[A[0]])
    vac = np.diag([0.5 / om0, 0.5 * om0])
    second = [(runs[i]["cov_udw"][:2, :2] - vac) / lam[i] ** 2 for i in np.flatnonzero(pos)[:2]]
    rel2 = float(np.max(np.abs(second[0] - second[1])) / np.max(np.abs(second[0])))
    d0 = second[0]
    n_exc = 0.5 * (om0 * d0[0, 0] + d0[1, 1] / om0)

    t = time_grid(cfg.t_i, setup.t_f, setup.n_steps)
    grid = setup.basis.grid
    profile = setup.basis.background.volume_density * setup.sigma * setup.basis.modes[:, A[0]]
    resp = udw_response(om0, setup.switching, t, profile, grid, setup.box, 1.0)
    udw_n = resp / (2.0 * om0)
    log.info("reduction slope %.4f (residual %.3g)", fit.slope, fit.max_residual)
    return ReductionReport(
        lam, dmax, dfro, fit, monotone, rel2, float(n_exc), float(udw_n),
        float(abs(n_exc - udw_n) / abs(udw_n)), setup.basis.omegas, setup.n_steps, runs,
    )


# ---------------------------------------------------------------- harvesting


@dataclass(frozen=True)
class HarvestConfig:
    probe_mass: float = 1.0
    well_stiffness: float = 2.0
    separation_widths: float = 20.0
    margin_widths: float = 12.0
    points_per_width: int = 50
    barrier_height: float = 1.0e3
    overlap_threshold: float = 1e-6
    gate_modes: int = 4
    field_mass: float = 0.1
    box_factor: float = 4.0
    k_max_field: int = 200
    sigma: dict = field(default_factory=lambda: {"kind": "uniform", "amplitude": 5.0})
    switching_width: float = 1.6
    window_widths: float = 6.0
    lam: float = 1e-2
    n_steps: int = None
    mirrored: bool = False

    @property
    def width(self):
        """Ground-state width 1/Omega of each harmonic well."""
        return 1.0 / self.well_stiffness

    @property
    def well_positions(self):
        half = 0.5 * self.separation_widths * self.width
        return (half, -half) if self.mirrored else (-half, half)

    def grid(self):
        half = (0.5 * self.separation_widths + self.margin_widths) * self.width
        n = int(round(2 * half / self.width * self.points_per_width)) + 1
        return make_grid(-half, half, n)

    def window(self):
        half = self.window_widths * self.switching_width
        return -half, half, GaussianSwitching(0.0, self.switching_width)


def double_well_potential(cfg, grid):
    """Two harmonic wells joined by a quartic barrier on the middle half of the gap.

    The barrier vanishes (with zero slope) a quarter gap from each minimum, so
    near either well the potential is that well's own harmonic potential.
    """
    x = grid.points
    xa, xb = sorted(cfg.well_positions)
    m2, om4 = cfg.probe_mass**2, cfg.well_stiffness**4
    ua = 0.5 * (m2 + om4 * (x - xa) ** 2)
    ub = 0.5 * (m2 + om4 * (x - xb) ** 2)
    half = 0.5 * (xb - xa)
    s = (x - 0.5 * (xa + xb)) / half
    bump = cfg.barrier_height * np.where(np.abs(s) < 0.5, (1 - 4 * s * s) ** 2, 0.0)
    return Potential(grid, np.minimum(ua, ub) + bump)


def analytic_gaussian_overlap(separation, stiffness):
    """Overlap of two unit-normalized harmonic ground states: exp(-(Omega d)^2 / 4)."""
    return float(np.exp(-0.25 * (stiffness * separation) ** 2))


@dataclass
class HarvestResult:
    negativity: float
    covariance: np.ndarray
    max_overlap: float
    ground_overlap: float
    analytic_overlap: float
    detector_omegas: np.ndarray
    perturbative_negativity: float
    perturbative_covariance: np.ndarray
    n_steps: int
    diagnostics: object = field(repr=False)
    region_residual: float = float("nan")

    def summary(self):
        return {
            "negativity": self.negativity,
            "perturbative_negativity": self.perturbative_negativity,
            "max_overlap": self.max_overlap,
            "ground_overlap": self.ground_overlap,
            "analytic_overlap": self.analytic_overlap,
            "detector_omegas": [float(w) for w in self.detector_omegas],
            "n_steps": self.n_steps,
            "min_uncertainty_eigenvalue": self.diagnostics.min_uncertainty_eigenvalue,
            "region_residual": self.region_residual,
        }


def region_bases(cfg, grid=None):
    grid = cfg.grid() if grid is None else grid
    bg = SpacetimeBackground.flat(grid)
    out = []
    for xc in cfg.well_positions:
        pot = harmonic_potential(grid, cfg.probe_mass, cfg.well_stiffness, xc)
        out.append(solve_modes(assemble_E2(grid, bg, pot), cfg.gate_modes))
    return out


def overlap_gate(cfg, bases):
    ov = mode_overlap(bases[0], bases[1])
    worst = float(np.max(np.abs(ov)))
    if not worst < cfg.overlap_threshold:
        raise OverlapGateFailed(
            f"region modes overlap: max |O_nm| = {worst:.3g} >= threshold {cfg.overlap_threshold:.3g}",
            max_overlap=worst,
        )
    return ov


def run_harvesting(cfg):
    """Two single-mode detectors, one per well, harvesting from the field vacuum.

    The lowest mode of each well becomes a detector; both start in their
    ground states with the field in its vacuum. Returns the logarithmic
    negativity between the detectors after the interaction together with
    the perturbative prediction built from the smeared Wightman function.

    Raises
    ------
    OverlapGateFailed
        When modes from the two wells are not orthogonal enough to be
        treated as independent.
    """
    grid = cfg.grid()
    bases = region_bases(cfg, grid)
    ov = overlap_gate(cfg, bases)
    d = abs(cfg.well_positions[1] - cfg.well_positions[0])

    box = FieldBox.centered_on(grid, cfg.box_factor * grid.extent, cfg.field_mass, cfg.k_max_field)
    sigma = spatial_profile(cfg.sigma, grid.points)
    g = np.vstack([project_smearing(sigma, b.truncated(1), box).g for b in bases])
    om = np.array([b.omegas[0] for b in bases])
    t_i, t_f, switching = cfg.window()
    n_steps = cfg.n_steps or default_steps(np.concatenate([om, box.frequencies]), t_i, t_f)
    n_steps += n_steps % 2

    H = coupled_hamiltonian(om, box.frequencies, g, cfg.lam, switching, ["A", "B"])
    final = evolve(vacuum_state(H.omegas, H.labels), H, t_i, t_f, n_steps)
    det = partial_trace(final, ["A", "B"])
    en = log_negativity(det, (["A"], ["B"]))

    t = time_grid(t_i, t_f, n_steps)
    vol = bases[0].background.volume_density * sigma
    profiles = [vol * b.modes[:, 0] for b in bases]
    cov2 = second_order_detector_covariance(om, profiles, grid, box, switching, t, cfg.lam)
    en2 = log_negativity(SymplecticState(np.zeros(4), cov2, ["A", "B"]), (["A"], ["B"]))
    return HarvestResult(
        en, det.cov, float(np.max(np.abs(ov))), float(ov[0, 0]),
        analytic_gaussian_overlap(d, cfg.well_stiffness), om, en2, cov2, n_steps, symplectic_check(final),
        region_residual(cfg, bases),
    )


def region_residual(cfg, bases):
    """Largest relative eigen-residual of a region ground mode under the full double well.

    Small values mean each detector mode is, to that accuracy, also a mode of
    the joint potential, so solving the wells separately is justified.
    """
    grid = bases[0].grid
    E2 = assemble_E2(grid, bases[0].background, double_well_potential(cfg, grid))
    worst = 0.0
    for b in bases:
        v = b.modes[:, 0]
        r = E2.apply(v) - b.omega_sq[0] * v
        worst = max(worst, float(np.sqrt(weighted_inner_product(r, r, b.background)) / b.omega_sq[0]))
    return worst


# ---------------------------------------------------------------- lapse


@dataclass(frozen=True)
class ProperFrame:
    omega_proper: float
    dtau_dt: float
    amplitude_factor: float


def lapse_rescale(omega_killing, N_at_x):
    """Proper-frame gap, clock rate and amplitude rescaling at a static position."""
    if not N_at_x > 0:
        raise NonPositiveLapse(f"lapse must be positive, got {N_at_x}")
    return ProperFrame(omega_killing / N_at_x, float(N_at_x), float(np.sqrt(N_at_x)))


def rescaled_action_coefficients(omega_killing, N_at_x, kinetic=1.0, potential=None):
    """Quadratic coefficients of L = (kin phi_t^2 - pot phi^2)/2 re-expressed in (tau, Phi).

    With tau = N t and phi = c Phi (c = 1/sqrt(N)) one has phi_t = c N Phi_tau
    and dt = dtau / N, so the pair (kin, pot) becomes (kin c^2 N, pot c^2 / N).
    For the free oscillator (1, w^2) this is (1, (w/N)^2).
    """
    pf = lapse_rescale(omega_killing, N_at_x)
    pot = omega_killing**2 if potential is None else potential
    c = 1.0 / pf.amplitude_factor  # phi = c Phi
    rate = pf.dtau_dt  # d/dt = rate d/dtau, dt = dtau / rate
    return kinetic * (c * rate) ** 2 / rate, pot * c**2 / rate


__all__ = [
    "ScalingFit",
    "fit_scaling",
    "ReductionConfig",
    "ReductionReport",
    "prepare_reduction",
    "run_reduction",
    "HarvestConfig",
    "HarvestResult",
    "run_harvesting",
    "region_bases",
    "overlap_gate",
    "region_residual",
    "double_well_potential",
    "analytic_gaussian_overlap",
    "ProperFrame",
    "lapse_rescale",
    "rescaled_action_coefficients",
]
