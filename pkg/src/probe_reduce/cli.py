"""Command-line front end: ``probe-reduce <command> --config <path> --out <dir>``.

Configs are JSON, validated strictly (unknown keys are errors and every
violation is reported at once). Tabular results go to RFC-4180 CSV with 17
significant digits; summaries go to sorted-key JSON. Nothing that depends on
wall-clock time or scheduling is written to disk, so a fixed config and seed
reproduce the same bytes.

Exit status: 0 success, 1 physics gate (non-confining potential, overlapping
wells, uncertainty violation), 2 config error.
"""
import argparse
import csv
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from . import _backend
from .errors import OverlapGateFailed, PhysicsGateError, ProbeReduceError, SchemaError
from .experiments import HarvestConfig, ReductionConfig, run_harvesting, run_reduction
from .geometry import SpacetimeBackground, harmonic_potential, make_grid
from .kernels import KernelSet, SourceTrajectory, influence_phase
from .modes import assemble_E2, solve_modes
from .smearing import time_grid

log = logging.getLogger("probe_reduce")

COMMANDS = ("modes", "influence", "reduce", "harvest", "sweep")
EXIT_OK, EXIT_GATE, EXIT_CONFIG = 0, 1, 2

LAMBDA_MAX = 0.1
N_POINTS_MAX = 100_000
N_PROBE_MAX = 128
K_FIELD_MAX = 1024


# ---------------------------------------------------------------- schema


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, strict=True)


class GridSection(_Strict):
    x_min: float = -12.0
    x_max: float = 12.0
    n_points: int = Field(2001, ge=3, le=N_POINTS_MAX)

    @model_validator(mode="after")
    def _ordered(self):
        if not self.x_min < self.x_max:
            raise ValueError("x_min must be smaller than x_max")
        return self


class ProfileSection(_Strict):
    kind: Literal["uniform", "gaussian"] = "uniform"
    amplitude: float = 1.0
    center: float = 0.0
    width: Optional[float] = Field(None, gt=0)

    @model_validator(mode="after")
    def _width(self):
        if self.kind == "gaussian" and self.width is None:
            raise ValueError("gaussian profile needs a width")
        return self

    def as_dict(self):
        return self.model_dump(exclude_none=True)


class ModesSection(_Strict):
    mass: float = Field(1.0, ge=0)
    stiffness: float = Field(1.0, gt=0)
    center: float = 0.0
    lapse_curvature: float = Field(0.0, ge=0)
    grid: GridSection = GridSection()
    k_max: int = Field(10, ge=1)


class InfluenceSection(_Strict):
    omegas: List[float] = Field([1.0, 2.0, 3.0], min_length=1)
    t_f: float = Field(10.0, gt=0)
    n_steps: int = Field(400, ge=2, le=N_POINTS_MAX)
    lam: float = Field(1e-2, ge=0, le=LAMBDA_MAX)
    n_trajectories: int = Field(10, ge=1, le=10_000)
    scale: float = 0.7

    @field_validator("omegas")
    @classmethod
    def _positive(cls, v):
        if any(not w > 0 for w in v):
            raise ValueError("all frequencies must be positive")
        return v


class ReductionSection(_Strict):
    probe_mass: float = Field(1.0, ge=0)
    probe_stiffness: float = Field(1.0, gt=0)
    grid: GridSection = GridSection()
    lapse_curvature: float = Field(0.0, ge=0)
    n_probe: int = Field(24, ge=1, le=N_PROBE_MAX)
    detector_modes: List[int] = [0]
    box_length: float = Field(96.0, gt=0)
    field_mass: float = Field(1.0, gt=0)
    k_max_field: int = Field(64, ge=1, le=K_FIELD_MAX)
    sigma: ProfileSection = ProfileSection()
    switching_center: Optional[float] = None
    switching_width: float = Field(1.0, gt=0)
    lambdas: List[float] = [1e-3, 2e-3, 4e-3, 8e-3]
    t_i: float = 0.0
    t_f: Optional[float] = None
    n_steps: Optional[int] = Field(None, ge=1)

    @field_validator("lambdas")
    @classmethod
    def _lambdas(cls, v):
        if len(v) < 3:
            raise ValueError("at least three lambda values are needed for the scaling fit")
        if any(not 0 <= x <= LAMBDA_MAX for x in v):
            raise ValueError(f"lambda values must lie in [0, {LAMBDA_MAX}]")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("lambda values must be strictly ascending")
        return v

    @model_validator(mode="after")
    def _subset(self):
        if not self.detector_modes or any(not 0 <= n < self.n_probe for n in self.detector_modes):
            raise ValueError("detector_modes must be a nonempty subset of 0..n_probe-1")
        if len(set(self.detector_modes)) != len(self.detector_modes):
            raise ValueError("detector_modes must not repeat")
        return self

    def build(self):
        d = self.model_dump(exclude={"grid", "sigma"})
        d.update(
            x_min=self.grid.x_min, x_max=self.grid.x_max, n_points=self.grid.n_points,
            sigma=self.sigma.as_dict(), detector_modes=tuple(self.detector_modes),
            lambdas=tuple(self.lambdas),
        )
        return ReductionConfig(**d)


class HarvestSection(_Strict):
    probe_mass: float = Field(1.0, ge=0)
    well_stiffness: float = Field(2.0, gt=0)
    separation_widths: float = Field(20.0, gt=0)
    margin_widths: float = Field(12.0, gt=0)
    points_per_width: int = Field(50, ge=4)
    barrier_height: float = Field(1.0e3, ge=0)
    overlap_threshold: float = Field(1e-6, gt=0)
    gate_modes: int = Field(4, ge=1)
    field_mass: float = Field(0.1, gt=0)
    box_factor: float = Field(4.0, ge=1)
    k_max_field: int = Field(200, ge=1, le=K_FIELD_MAX)
    sigma: ProfileSection = ProfileSection(amplitude=5.0)
    switching_width: float = Field(1.6, gt=0)
    window_widths: float = Field(6.0, gt=0)
    lam: float = Field(1e-2, ge=0, le=LAMBDA_MAX)
    n_steps: Optional[int] = Field(None, ge=1)
    mirrored: bool = False

    @model_validator(mode="after")
    def _size(self):
        n = round((self.separation_widths + 2 * self.margin_widths) * self.points_per_width) + 1
        if n > N_POINTS_MAX:
            raise ValueError(f"grid would need {n} points (limit {N_POINTS_MAX})")
        return self

    def build(self):
        d = self.model_dump(exclude={"sigma"})
        d["sigma"] = self.sigma.as_dict()
        return HarvestConfig(**d)


class SweepSection(_Strict):
    parameter: Literal["lam", "separation_widths", "switching_width", "field_mass"] = "lam"
    values: List[float] = Field([2.5e-3, 5e-3, 1e-2], min_length=1)


class RunConfig(_Strict):
    command: Optional[Literal["modes", "influence", "reduce", "harvest", "sweep"]] = None
    seed: int = Field(0, ge=0)
    modes: ModesSection = ModesSection()
    influence: InfluenceSection = InfluenceSection()
    reduction: ReductionSection = ReductionSection()
    harvest: HarvestSection = HarvestSection()
    sweep: SweepSection = SweepSection()

    @model_validator(mode="after")
    def _sweep_values(self):
        if self.sweep.parameter == "lam" and any(not 0 <= v <= LAMBDA_MAX for v in self.sweep.values):
            raise ValueError(f"sweep values for lam must lie in [0, {LAMBDA_MAX}]")
        if self.sweep.parameter != "lam" and any(not v > 0 for v in self.sweep.values):
            raise ValueError(f"sweep values for {self.sweep.parameter} must be positive")
        return self


def _schema_errors(exc):
    out = []
    for e in exc.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        msg = "unknown field" if e["type"] == "extra_forbidden" else e["msg"]
        out.append({"loc": loc, "msg": msg})
    return out


def parse_config(path):
    """Read and validate a JSON run config.

    Raises
    ------
    FileNotFoundError
    SchemaError
        Lists every violation with its dotted field path.
    """
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError([{"loc": "<file>", "msg": f"invalid JSON: {exc}"}]) from None
    if not isinstance(raw, dict):
        raise SchemaError([{"loc": "<root>", "msg": "config must be a JSON object"}])
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise SchemaError(_schema_errors(exc)) from None


# ---------------------------------------------------------------- output


def fmt(v):
    """17 significant digits, '.' decimal separator; integers and strings pass through."""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\r\n")
        wr.writerow(header)
        for row in rows:
            wr.writerow([fmt(v) for v in row])


def _json_ready(obj):
    if isinstance(obj, dict):
        return {str(k): _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def write_json(path, obj):
    Path(path).write_text(json.dumps(_json_ready(obj), indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------- commands


def cmd_modes(cfg, out, threads):
    s = cfg.modes
    grid = make_grid(s.grid.x_min, s.grid.x_max, s.grid.n_points)
    if s.lapse_curvature:
        x = grid.points
        bg = SpacetimeBackground(grid, 1.0 + s.lapse_curvature * (x - s.center) ** 2, np.ones_like(x))
    else:
        bg = SpacetimeBackground.flat(grid)
    pot = harmonic_potential(grid, s.mass, s.stiffness, s.center)
    basis = solve_modes(assemble_E2(grid, bg, pot), s.k_max)
    basis.to_csv(out / "modes.csv")
    write_csv(
        out / "spectrum.csv", ["n", "omega_sq", "omega"],
        [(n, w2, math.sqrt(w2)) for n, w2 in enumerate(basis.omega_sq)],
    )
    write_json(out / "summary.json", {
        "command": "modes",
        "k_max": s.k_max,
        "gram_error_max": float(np.max(np.abs(basis.gram() - np.eye(len(basis))))),
        "confinement_margin": float(pot.confinement_margin()),
        "omega_sq": basis.omega_sq,
    })


def random_trajectory(rng, omegas, times, scale):
    """Smooth random complex source: a few random Fourier components per mode."""
    n_modes, n_t = len(omegas), times.size
    span = times[-1] - times[0]
    freqs = np.arange(1, 5) * 2 * np.pi / span
    amp = rng.normal(size=(n_modes, 4)) + 1j * rng.normal(size=(n_modes, 4))
    phase = rng.uniform(0, 2 * np.pi, size=(n_modes, 4))
    s = np.einsum("mf,mft->mt", amp, np.exp(1j * (freqs[None, :, None] * (times - times[0]) + phase[:, :, None])))
    return SourceTrajectory(times, scale * s / 4)


def cmd_influence(cfg, out, threads):
    s = cfg.influence
    rng = np.random.default_rng(cfg.seed)
    ks = KernelSet(np.array(s.omegas))
    t = time_grid(0.0, s.t_f, s.n_steps)
    rows = []
    worst_cancel = 0.0
    for i in range(s.n_trajectories):
        psi = random_trajectory(rng, s.omegas, t, s.scale)
        psi_p = random_trajectory(rng, s.omegas, t, s.scale)
        same = influence_phase(psi, psi, ks, s.lam)
        cross = influence_phase(psi, psi_p, ks, s.lam)
        rel = abs(same.value) / same.term_scale if same.term_scale else 0.0
        worst_cancel = max(worst_cancel, rel)
        rows.append((i, same.value.real, same.value.imag, same.term_scale, cross.value.real, cross.value.imag, cross.term_scale))
    write_csv(
        out / "influence.csv",
        ["trajectory", "diag_re", "diag_im", "diag_scale", "cross_re", "cross_im", "cross_scale"],
        rows,
    )
    write_json(out / "summary.json", {
        "command": "influence", "seed": cfg.seed, "n_trajectories": s.n_trajectories,
        "max_relative_diagonal": worst_cancel,
    })


def cmd_reduce(cfg, out, threads):
    rep = run_reduction(cfg.reduction.build(), workers=threads)
    rows = list(rep.rows())
    header = list(rows[0])
    write_csv(out / "report.csv", header, [[r[h] for h in header] for r in rows])
    for i, run in enumerate(rep.runs):
        labels = [f"probe{n}" for n in cfg.reduction.detector_modes]
        _write_cov(out / f"cov_full_{i:03d}.csv", run["cov_full"], labels)
        _write_cov(out / f"cov_udw_{i:03d}.csv", run["cov_udw"], labels)
    write_json(out / "summary.json", {"command": "reduce", **rep.summary()})


def _write_cov(path, cov, labels):
    header = []
    for lab in labels:
        header += [f"phi:{lab}", f"pi:{lab}"]
    write_csv(path, header, cov)


def _harvest_row(res):
    c = res.covariance
    return [res.negativity, res.perturbative_negativity, res.max_overlap] + list(c.ravel())


_HARVEST_HEADER = ["negativity", "perturbative_negativity", "max_overlap"] + [
    f"cov_{i}{j}" for i in range(4) for j in range(4)
]


def cmd_harvest(cfg, out, threads):
    hc = cfg.harvest.build()
    try:
        res = run_harvesting(hc)
    except OverlapGateFailed as exc:
        write_json(out / "diagnostic.json", {
            "command": "harvest", "gate": "overlap", "max_overlap": exc.max_overlap,
            "threshold": hc.overlap_threshold, "message": str(exc),
        })
        raise
    _write_cov(out / "covariance.csv", res.covariance, ["A", "B"])
    write_json(out / "summary.json", {"command": "harvest", **res.summary()})


def _sweep_job(args):
    idx, hc = args
    try:
        res = run_harvesting(hc)
    except PhysicsGateError as exc:
        return idx, None, f"{type(exc).__name__}: {exc}"
    return idx, _harvest_row(res), None


def cmd_sweep(cfg, out, threads):
    base = cfg.harvest.build()
    sw = cfg.sweep
    jobs = [(i, replace(base, **{sw.parameter: float(v)})) for i, v in enumerate(sw.values)]
    runs_dir = out / "runs"
    runs_dir.mkdir(exist_ok=True)
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(threads, len(jobs))) as ex:
            results = list(ex.map(_sweep_job, jobs))
    else:
        results = [_sweep_job(j) for j in jobs]
    results.sort(key=lambda r: r[0])
    merged, failures = [], []
    for idx, row, err in results:
        value = sw.values[idx]
        if row is None:
            failures.append({"run": idx, "value": value, "error": err})
            write_json(runs_dir / f"run_{idx:04d}.json", {"run": idx, "value": value, "error": err})
            continue
        write_csv(runs_dir / f"run_{idx:04d}.csv", ["run", sw.parameter] + _HARVEST_HEADER, [[idx, value] + row])
        merged.append([idx, value] + row)
    write_csv(out / "sweep.csv", ["run", sw.parameter] + _HARVEST_HEADER, merged)
    write_json(out / "summary.json", {
        "command": "sweep", "parameter": sw.parameter, "n_runs": len(jobs), "failures": failures,
    })


DISPATCH = {
    "modes": cmd_modes,
    "influence": cmd_influence,
    "reduce": cmd_reduce,
    "harvest": cmd_harvest,
    "sweep": cmd_sweep,
}


def resolve_threads(cli_value):
    env = os.environ.get("PROBE_REDUCE_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise SchemaError([{"loc": "PROBE_REDUCE_THREADS", "msg": f"not an integer: {env!r}"}]) from None
    elif cli_value is not None:
        n = cli_value
    else:
        n = os.cpu_count() or 1
    if n < 1:
        raise SchemaError([{"loc": "threads", "msg": "must be >= 1"}])
    return n


def dispatch(command, cfg, out, threads=1):
    """Run one command; returns the process exit status."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        DISPATCH[command](cfg, out, threads)
    except PhysicsGateError as exc:
        log.error("physics gate %s: %s", type(exc).__name__, exc)
        return EXIT_GATE
    except (ProbeReduceError, ValueError) as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="probe-reduce", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="JSON run config")
    ap.add_argument("--out", required=True, help="output directory")
    ap.add_argument("--threads", type=int, default=None, help="worker processes (default: all cores)")
    ap.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = parse_config(args.config)
        if cfg.command is not None and cfg.command != args.command:
            raise SchemaError([{"loc": "command", "msg": f"config is for {cfg.command!r}, not {args.command!r}"}])
        if args.seed is not None:
            if args.seed < 0:
                raise SchemaError([{"loc": "seed", "msg": "must be >= 0"}])
            cfg = cfg.model_copy(update={"seed": args.seed})
        threads = resolve_threads(args.threads)
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SchemaError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    log.info("backend: %s, threads: %d", _backend.BACKEND, threads)
    return dispatch(args.command, cfg, args.out, threads)


if __name__ == "__main__":
    sys.exit(main())
