"""Acceptance criteria 1-9, each at its stated tolerance and time budget.

Every test records one PASS/FAIL line, repeated in the pytest terminal
summary under "acceptance criteria".
"""
import json
import subprocess
import sys
import time

import numpy as np
import pytest

from probe_reduce.experiments import HarvestConfig, ReductionConfig, run_harvesting, run_reduction
from probe_reduce.gaussian import (
    QuadraticHamiltonian,
    SymplecticState,
    evolve,
    log_negativity,
    min_uncertainty_eigenvalue,
    two_mode_squeezed_state,
    vacuum_state,
)
from probe_reduce.geometry import SpacetimeBackground, harmonic_potential, make_grid
from probe_reduce.kernels import KernelSet, SourceTrajectory, influence_phase
from probe_reduce.modes import assemble_E2, resolution_residual, solve_modes
from probe_reduce.smearing import ConstantSwitching, time_grid

from test_gaussian import two_mode_oracle


def _harmonic(k, mass=1.0, stiffness=1.0, center=0.0, n=2001, lapse=None):
    half = 12.0 / stiffness
    grid = make_grid(center - half, center + half, n)
    bg = SpacetimeBackground.flat(grid) if lapse is None else SpacetimeBackground(grid, lapse(grid.points), 1.0)
    return solve_modes(assemble_E2(grid, bg, harmonic_potential(grid, mass, stiffness, center)), k)


def test_criterion_1_harmonic_spectrum(acceptance):
    t0 = time.perf_counter()
    basis = _harmonic(10)
    elapsed = time.perf_counter() - t0
    n = np.arange(10)
    err = float(np.max(np.abs(basis.omega_sq / (1.0 + (2 * n + 1)) - 1)))
    ok = err < 1e-6 and elapsed < 5
    acceptance(1, "harmonic oracle spectrum", ok, f"max rel error {err:.2e} (< 1e-6)", elapsed)
    assert ok


def test_criterion_2_gram_and_resolution(acceptance):
    t0 = time.perf_counter()
    bases = [
        _harmonic(40),
        _harmonic(20, mass=0.5, stiffness=2.0),
        _harmonic(20, center=1.3),
        _harmonic(20, lapse=lambda x: 1 + 0.05 * x**2),
    ]
    gram = max(float(np.max(np.abs(b.gram() - np.eye(len(b))))) for b in bases)
    x = bases[0].grid.points
    bump = np.exp(-0.5 * ((x - 0.8) / 0.9) ** 2)
    res = resolution_residual(bases[0], bump)
    elapsed = time.perf_counter() - t0
    ok = gram < 1e-8 and res < 1e-4 and elapsed < 5
    acceptance(2, "Gram identity and completeness", ok, f"max |Gram - I| {gram:.2e}, bump residual @40 modes {res:.2e}", elapsed)
    assert ok


def test_criterion_3_influence_phase(acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    ks = KernelSet([0.6, 1.1, 2.4, 3.3])
    t = time_grid(0.0, 12.0, 600)
    worst_cancel, worst_scale = 0.0, 0.0
    for _ in range(100):
        def traj():
            c = rng.normal(size=(4, 5)) + 1j * rng.normal(size=(4, 5))
            f = np.arange(1, 6)[:, None] * 2 * np.pi / 12.0
            return SourceTrajectory(t, c @ np.exp(1j * (f * t + rng.uniform(0, 6, (5, 1)))))

        psi, psi_p = traj(), traj()
        same = influence_phase(psi, psi, ks, 0.03)
        worst_cancel = max(worst_cancel, abs(same.value) / same.term_scale)
        a = rng.uniform(-4, 4)
        base = influence_phase(psi, psi_p, ks, 0.03).value
        scaled = influence_phase(psi.scaled(a), psi_p.scaled(a), ks, 0.03).value
        worst_scale = max(worst_scale, abs(scaled - a * a * base) / abs(a * a * base))
    elapsed = time.perf_counter() - t0
    ok = worst_cancel < 1e-10 and worst_scale < 1e-12 and elapsed < 10
    acceptance(3, "influence phase cancellation and scaling", ok,
               f"|S[psi,psi]|/scale {worst_cancel:.2e}, scaling rel error {worst_scale:.2e}", elapsed)
    assert ok


def test_criterion_4_gaussian_dynamics(acceptance):
    t0 = time.perf_counter()
    lows = []
    om = np.array([0.7, 1.0, 2.5, 4.0])
    H0 = QuadraticHamiltonian(om, np.zeros((4, 4)), 0.0, ConstantSwitching(), tuple(range(4)))
    vac = vacuum_state(om)
    out = evolve(vac, H0, 0.0, 20.0, 2000)
    stationary = float(np.max(np.abs(out.cov - vac.cov)))
    lows.append(min_uncertainty_eigenvalue(out.cov))

    c, T = 0.1, 10.0
    H = QuadraticHamiltonian([1.0, 1.0], np.array([[0, 1.0], [1.0, 0]]), c, ConstantSwitching(), ("a", "b"))
    s0 = SymplecticState([1.0, 0.0, 0.0, 0.0], vacuum_state([1.0, 1.0]).cov, ("a", "b"))
    mean_ref, cov_ref = two_mode_oracle(c, T, s0.mean, s0.cov)
    errs = {}
    for n in (250, 500, 1000):
        s = evolve(s0, H, 0.0, T, n)
        lows.append(min_uncertainty_eigenvalue(s.cov))
        errs[n] = max(np.max(np.abs(s.cov - cov_ref)), np.max(np.abs(s.mean - mean_ref)))
    ratio = errs[250] / errs[500]
    elapsed = time.perf_counter() - t0
    ok = stationary < 1e-9 and errs[1000] < 1e-6 and 12 <= ratio <= 20 and min(lows) >= -1e-9 and elapsed < 30
    acceptance(4, "Gaussian dynamics", ok,
               f"vacuum drift {stationary:.1e}, oracle error {errs[1000]:.1e}, RK4 ratio {ratio:.2f}, "
               f"min uncertainty eig {min(lows):.2e}", elapsed)
    assert ok


@pytest.fixture(scope="module")
def reduction():
    t0 = time.perf_counter()
    rep = run_reduction(ReductionConfig())
    return rep, time.perf_counter() - t0


def test_criterion_5_reduction_scaling(acceptance, reduction):
    rep, elapsed = reduction
    ok = rep.fit.slope >= 3.5 and rep.fit.max_residual < 0.2 and rep.monotone and elapsed < 600
    acceptance(5, "UDW reduction scaling", ok,
               f"slope {rep.fit.slope:.4f} (>= 3.5), fit residual {rep.fit.max_residual:.1e}, monotone {rep.monotone}",
               elapsed)
    assert ok


def test_criterion_6_second_order_consistency(acceptance, reduction):
    rep, elapsed = reduction
    ok = rep.second_order_rel_diff < 0.02 and rep.excitation_rel_diff < 0.05
    acceptance(6, "second-order detector response", ok,
               f"Delta sigma / lam^2 spread {rep.second_order_rel_diff:.1e} (< 2%), "
               f"excitation vs response {rep.excitation_rel_diff:.1e} (< 5%)", elapsed)
    assert ok


def test_criterion_7_harvesting(acceptance):
    t0 = time.perf_counter()
    zero = run_harvesting(HarvestConfig(lam=0.0))
    res = run_harvesting(HarvestConfig())
    elapsed = time.perf_counter() - t0
    overlap_rel = abs(res.ground_overlap / res.analytic_overlap - 1)
    en_rel = abs(res.negativity / res.perturbative_negativity - 1)
    ok = (
        zero.negativity == 0.0
        and res.max_overlap < 1e-6
        and overlap_rel < 0.1
        and res.negativity > 0
        and en_rel < 0.1
        and elapsed < 600
    )
    acceptance(7, "double-well harvesting", ok,
               f"E_N(lam=0) = {zero.negativity}, max overlap {res.max_overlap:.1e}, overlap vs analytic {overlap_rel:.1e}, "
               f"E_N {res.negativity:.4e} vs oracle {res.perturbative_negativity:.4e} (rel {en_rel:.1e}), region residual {res.region_residual:.1e}", elapsed)
    assert ok


def test_criterion_8_tmsv_negativity(acceptance):
    t0 = time.perf_counter()
    en = log_negativity(two_mode_squeezed_state(0.5), (["a"], ["b"]))
    elapsed = time.perf_counter() - t0
    ok = abs(en - 1.0) <= 1e-8 and elapsed < 1
    acceptance(8, "two-mode squeezed negativity", ok, f"E_N = {en:.12f}", elapsed)
    assert ok


def test_criterion_9_determinism(acceptance, reduction, tmp_path):
    """Each command runs twice with the same config and seed; every run is timed on its own."""
    outputs = {}
    per_run = []
    for command in ("harvest", "influence"):
        cfg = tmp_path / f"{command}.json"
        cfg.write_text(json.dumps({"command": command, "seed": 11}))
        for k in range(2):
            out = tmp_path / f"{command}{k}"
            t0 = time.perf_counter()
            subprocess.run(
                [sys.executable, "-m", "probe_reduce.cli", command, "--config", str(cfg), "--out", str(out), "--seed", "11"],
                check=True,
            )
            per_run.append(time.perf_counter() - t0)
            outputs.setdefault(k, {}).update({f"{command}/{p.name}": p.read_bytes() for p in sorted(out.glob("*.csv"))})
    elapsed = max(per_run)
    budget = 2 * reduction[1]
    same = outputs[0] == outputs[1] and len(outputs[0]) > 0
    ok = same and elapsed < budget
    acceptance(9, "byte-identical CSV", ok,
               f"{len(outputs[0])} CSV file(s) identical: {same}; slowest run vs budget {budget:.0f} s", elapsed)
    assert ok
