"""Scenario orchestration: runs, sweeps, pulse-area optimization, CSV export.

A scenario run integrates the master equation until the emission has decayed,
extends the trajectory far enough that every regression launch sees a full
tau window, builds the correlation surfaces, and reduces them to the scalar
figures of merit.  Results are written as deterministic CSV files plus a
structured-text metadata sidecar so identical configurations reproduce
identical bytes.
"""

from __future__ import annotations

import itertools
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__ as ENGINE_VERSION
from .bath import PhononParams, gamma_plus
from .config import ScenarioConfig
from .correlators import (
    CorrelationSurface,
    FiguresOfMerit,
    TwoTimeGrid,
    emitted_photon_number,
    figures_of_merit,
)
from .evolve import TimeGrid, Trajectory, integrate, run_until_decayed
from .models import (
    BiexcitonModel,
    DissipatorKind,
    Model,
    PulseParams,
    TwoLevelCavityModel,
)

OUTDIR_ENV = "QDSPS_OUTDIR"
_FLAT_OBJECTIVE = 1e-3
_AREA_LO = np.pi
_AREA_HI = 30.0 * np.pi
_AREA_COARSE = 12
_AREA_TOL = 0.05 * np.pi


@dataclass
class RunRecord:
    """Summary of one scenario run, mirrored in the metadata sidecar."""

    config_hash: str
    engine_version: str
    label: str
    scheme: str
    dissipator: str
    theta: float
    t_end: float
    dt: float
    stride: int
    fom: FiguresOfMerit | None = None
    after_pulse: dict[str, float] = field(default_factory=dict)
    csv_paths: dict[str, str] = field(default_factory=dict)
    wall_clock_s: float = 0.0
    warnings: list[str] = field(default_factory=list)
    check_passed: bool | None = None
    sweep_point: dict[str, float] = field(default_factory=dict)


def build_model(config: ScenarioConfig, area: float | None = None) -> Model:
    theta = config.pulse_area if area is None else area
    if theta is None:
        raise ValueError("pulse area unresolved; optimize first")
    pulse = PulseParams(area=theta, tau_p=config.tau_p, center=config.center)
    bath = PhononParams(
        alpha=config.alpha, omega_b=config.omega_b, temperature=config.temperature
    )
    if config.scheme == "tpe_biexciton":
        return BiexcitonModel(
            binding_energy=config.binding_energy,
            g=config.g,
            kappa=config.kappa,
            gamma=config.gamma,
            gamma_u=config.gamma_u,
            n_max=config.n_max,
            pulse=pulse,
            bath=bath,
        )
    return TwoLevelCavityModel(
        delta_l=config.delta_l,
        g=config.g,
        kappa=config.kappa,
        gamma=config.gamma,
        n_max=config.n_max,
        pulse=pulse,
        bath=bath,
    )


def _decay_rate(model: Model) -> float:
    rate = model.gamma
    if model.kappa > 0:
        rate += 4.0 * model.g**2 / model.kappa
    return rate if rate > 0 else model.kappa


def resolve_numerics(config: ScenarioConfig, model: Model) -> tuple[float, int]:
    """Step size and sample stride honoring the stability guard.

    dt defaults to 0.01 ps, shrunk so dt * max-rate <= 0.045; the stride
    targets roughly 450 stored samples over the estimated emission window.
    """
    dt = config.dt
    if dt is None:
        dt = 0.01
        rate = model.max_rate()
        if rate > 0 and dt * rate > 0.045:
            dt = 0.045 / rate
    stride = config.stride
    if stride is None:
        t_est = model.pulse.center + 16.0 / max(_decay_rate(model), 1e-6)
        if config.t_max is not None:
            t_est = min(t_est, config.t_max)
        stride = max(1, round(t_est / (450.0 * dt)))
    return dt, stride


def _after_pulse_obs(traj: Trajectory, model: Model) -> dict[str, float]:
    """Population samples at 2 tau_p past the pulse peak."""
    t_probe = model.pulse.center + 2.0 * model.pulse.tau_p
    idx = int(np.argmin(np.abs(traj.times - t_probe)))
    out = {"t_probe": float(traj.times[idx])}
    for key, series in traj.observables.items():
        if key == "a":
            continue
        out[key] = float(series[idx])
    return out


def _format(x) -> str:
    if isinstance(x, float):
        return f"{x:.10g}"
    return str(x)


def _write_csv(path: str, header: list[str], rows, config_hash: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# config_hash={config_hash} engine_version={ENGINE_VERSION}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_format(x) for x in row) + "\n")


def write_trajectory_csv(
    path: str, traj: Trajectory, model: Model, config_hash: str
) -> None:
    keys = [k for k in traj.observables if k != "a"]
    header = ["t_ps", *keys, "re_a", "im_a"]
    columns = [traj.times] + [traj.observables[k] for k in keys]
    a_series = traj.observables["a"]
    columns += [a_series.real, a_series.imag]
    if isinstance(model, TwoLevelCavityModel):
        header.append("gamma_plus")
        env = np.array([model.drive_amplitude(t) for t in traj.times])
        columns.append(gamma_plus(env, model.delta_x, model.bath))
    _write_csv(path, header, zip(*columns), config_hash)


def write_surface_csv(path: str, surface: CorrelationSurface, config_hash: str) -> None:
    grid = surface.grid
    rows = (
        (t, tau, v.real, v.imag)
        for i, t in enumerate(grid.outer_times)
        for tau, v in zip(grid.tau, surface.values[i])
    )
    _write_csv(path, ["t_ps", "tau_ps", "re", "im"], rows, config_hash)


def _write_meta(path: str, record: RunRecord) -> None:
    lines = [
        f"config_hash = {record.config_hash}",
        f"engine_version = {record.engine_version}",
        f"label = {record.label}",
        f"scheme = {record.scheme}",
        f"dissipator = {record.dissipator}",
        f"theta_rad = {_format(record.theta)}",
        f"t_end_ps = {_format(record.t_end)}",
        f"dt_ps = {_format(record.dt)}",
        f"stride = {record.stride}",
        f"wall_clock_s = {record.wall_clock_s:.2f}",
    ]
    if record.fom is not None:
        fom = record.fom
        lines += [
            f"n_a = {_format(fom.n_a)}",
            f"indistinguishability = {_format(fom.indist)}",
            f"d1 = {_format(fom.d1)}",
            f"d2 = {_format(fom.d2)}",
            f"purcell = {_format(fom.purcell)}",
        ]
    for key, val in sorted(record.after_pulse.items()):
        lines.append(f"after_pulse.{key} = {_format(val)}")
    if record.check_passed is not None:
        lines.append(f"check_passed = {record.check_passed}")
    for name, p in sorted(record.csv_paths.items()):
        lines.append(f"file.{name} = {p}")
    for w in record.warnings:
        lines.append(f"warning = {w}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _run_dir(config: ScenarioConfig, outdir: str | None, suffix: str = "") -> str:
    base = outdir or os.environ.get(OUTDIR_ENV) or "qdsps-out"
    name = (config.label or config.scheme) + suffix + "-" + config.digest()[:8]
    path = os.path.join(base, name)
    os.makedirs(path, exist_ok=True)
    return path


def evaluate_checks(config: ScenarioConfig, fom: FiguresOfMerit | None) -> bool | None:
    """Compare figures of merit against the config's [check] thresholds."""
    if not config.check:
        return None
    if fom is None:
        return False
    ok = True
    for key, bound in config.check.items():
        field_name, _, side = key.rpartition("_")
        value = {"n_a": fom.n_a, "indist": fom.indist, "d1": fom.d1, "d2": fom.d2}[
            field_name
        ]
        ok &= value >= bound if side == "min" else value <= bound
    return bool(ok)


def simulate(
    config: ScenarioConfig, area: float | None = None
) -> tuple[Model, Trajectory, FiguresOfMerit | None, dict | None, TwoTimeGrid | None]:
    """Core pipeline: decayed trajectory, optional surfaces + figures of merit."""
    model = build_model(config, area)
    kind = config.dissipator
    dt, stride = resolve_numerics(config, model)
    traj = run_until_decayed(
        model.ground_state(),
        model,
        kind,
        dt=dt,
        threshold=config.threshold,
        t_max=config.t_max,
        sample_stride=stride,
    )
    need_fom = config.outputs["fom"] or config.outputs["surfaces"]
    if not need_fom:
        return model, traj, None, None, None
    t_end = traj.final_time
    ext_grid = TimeGrid(t_end, 2.0 * t_end, dt, sample_stride=stride)
    tail = integrate(traj.final_state, ext_grid, model, kind)
    full = Trajectory.concat(traj, tail)
    n_outer = round(t_end / (dt * stride)) + 1
    grid = TwoTimeGrid(t_start=0.0, dtau=dt * stride, n_outer=n_outer, n_tau=n_outer - 1)
    fom, surfaces = figures_of_merit(full, model, kind, grid)
    return model, full, fom, surfaces, grid


def run_scenario(
    config: ScenarioConfig, outdir: str | None = None, threads: int = 1
) -> RunRecord:
    """Execute one scenario end to end and persist its artifacts."""
    t_wall = time.time()
    collected: list[str] = []
    theta = config.pulse_area
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if config.optimize_area:
            theta, opt_warnings = optimize_area(config)
            collected.extend(opt_warnings)
        model, traj, fom, surfaces, grid = simulate(config, theta)
    collected.extend(str(w.message) for w in caught)
    collected.extend(traj.warnings)

    dt, stride = traj.dt, traj.sample_stride
    run_dir = _run_dir(config, outdir)
    digest = config.digest()
    # The trajectory extends to twice the emission window when surfaces were
    # built; report the emission window itself.
    t_end = grid.tau_max if grid is not None else traj.final_time
    record = RunRecord(
        config_hash=digest,
        engine_version=ENGINE_VERSION,
        label=config.label,
        scheme=config.scheme,
        dissipator=config.dissipator.value,
        theta=float(theta),
        t_end=t_end,
        dt=dt,
        stride=stride,
        fom=fom,
        after_pulse=_after_pulse_obs(traj, model),
        wall_clock_s=0.0,
        warnings=collected,
    )
    if config.outputs["trajectory"]:
        path = os.path.join(run_dir, "trajectory.csv")
        write_trajectory_csv(path, traj, model, digest)
        record.csv_paths["trajectory"] = path
    if config.outputs["surfaces"] and surfaces is not None:
        for name in ("G1", "G2"):
            path = os.path.join(run_dir, f"{name.lower()}.csv")
            write_surface_csv(path, surfaces[name], digest)
            record.csv_paths[name.lower()] = path
    if config.outputs["fom"] and fom is not None:
        path = os.path.join(run_dir, "fom.csv")
        _write_csv(
            path,
            ["theta_rad", "n_a", "indistinguishability", "d1", "d2", "purcell"],
            [(record.theta, fom.n_a, fom.indist, fom.d1, fom.d2, fom.purcell)],
            digest,
        )
        record.csv_paths["fom"] = path
    record.check_passed = evaluate_checks(config, fom)
    record.wall_clock_s = time.time() - t_wall
    _write_meta(os.path.join(run_dir, "run_meta.txt"), record)
    return record


# -- pulse-area optimization --------------------------------------------------


def _objective_tpe(config: ScenarioConfig):
    """Emitted photon number from a population-only run on a truncated window."""

    def objective(theta: float) -> float:
        model = build_model(config, theta)
        dt, _ = resolve_numerics(config, model)
        drain = model.gamma_u + (4.0 * model.g**2 / model.kappa if model.kappa > 0 else 0.0)
        t_end = model.pulse.center + 14.0 / max(drain, 1e-6)
        if model.kappa > 0:
            t_end += 6.0 / model.kappa
        stride = max(1, round(t_end / (300.0 * dt)))
        n_steps = int(np.ceil(t_end / (dt * stride))) * stride
        grid = TimeGrid(0.0, n_steps * dt, dt, sample_stride=stride)
        traj = integrate(model.ground_state(), grid, model, config.dissipator)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return emitted_photon_number(traj, model.kappa)

    return objective


def _objective_phonon_assisted(config: ScenarioConfig):
    """Exciton population at 2 tau_p past the pulse peak, simplified scattering."""
    kind = (
        DissipatorKind.WEAK_SIMPLIFIED
        if config.dissipator is not DissipatorKind.NONE
        else DissipatorKind.NONE
    )

    def objective(theta: float) -> float:
        model = build_model(config, theta)
        dt, _ = resolve_numerics(config, model)
        t_end = model.pulse.center + 2.0 * model.pulse.tau_p
        stride = max(1, round(t_end / (50.0 * dt)))
        n_steps = int(np.ceil(t_end / (dt * stride))) * stride
        grid = TimeGrid(0.0, n_steps * dt, dt, sample_stride=stride)
        traj = integrate(model.ground_state(), grid, model, kind)
        return float(traj.observables["exciton"][-1])

    return objective


def optimize_area(
    config: ScenarioConfig,
    lo: float = _AREA_LO,
    hi: float = _AREA_HI,
    coarse: int = _AREA_COARSE,
    tol: float = _AREA_TOL,
) -> tuple[float, list[str]]:
    """Maximize the scheme's inversion objective over the pulse area.

    Coarse scan on [lo, hi], then golden-section refinement of the bracket
    around the best coarse point down to a width of ``tol``.  A flat
    objective (spread below 1e-3) returns the coarse maximum with a warning.
    """
    if config.scheme == "tpe_biexciton":
        objective = _objective_tpe(config)
    elif config.scheme == "phonon_assisted":
        objective = _objective_phonon_assisted(config)
    else:
        raise ValueError("area optimization applies to the off-resonant schemes")
    warns: list[str] = []
    memo: dict[float, float] = {}

    def f(theta: float) -> float:
        key = round(theta, 9)
        if key not in memo:
            memo[key] = objective(theta)
        return memo[key]

    grid = np.linspace(lo, hi, coarse)
    values = np.array([f(th) for th in grid])
    best = int(np.argmax(values))
    if values.max() - values.min() < _FLAT_OBJECTIVE:
        warns.append(
            f"flat pulse-area objective (spread {values.max() - values.min():.2e}); "
            "returning the coarse-grid maximum"
        )
        return float(grid[best]), warns
    a = grid[max(0, best - 1)]
    b = grid[min(coarse - 1, best + 1)]
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = f(x2)
    theta = 0.5 * (a + b)
    if f(theta) < values[best]:
        theta = float(grid[best])
    return float(theta), warns


def optimize_tpe_area(
    config: ScenarioConfig, outdir: str | None = None, threads: int = 1
) -> tuple[float, RunRecord]:
    """Pulse-area optimization for the biexciton scheme plus one full run."""
    if config.scheme != "tpe_biexciton":
        raise ValueError("optimize_tpe_area requires scheme = tpe_biexciton")
    theta, warns = optimize_area(config)
    record = run_scenario(replace(config, pulse_area=theta), outdir=outdir, threads=threads)
    record.warnings.extend(warns)
    return theta, record


# -- sweeps -------------------------------------------------------------------


def _sweep_points(config: ScenarioConfig) -> list[dict[str, float]]:
    axes = sorted(config.sweep)
    if not axes:
        return [{}]
    combos = itertools.product(*(config.sweep[a] for a in axes))
    return [dict(zip(axes, combo)) for combo in combos]


def _apply_point(config: ScenarioConfig, point: dict[str, float]) -> ScenarioConfig:
    updates: dict = {"sweep": {}}
    if "area" in point:
        updates["pulse_area"] = point["area"]
    if "tau_p" in point:
        updates["tau_p"] = point["tau_p"]
        if config.center is not None:
            updates["center"] = None
    if "delta_l" in point:
        updates["delta_l"] = point["delta_l"]
    return replace(config, **updates)


def run_sweep(
    config: ScenarioConfig, outdir: str | None = None, threads: int = 1
) -> list[RunRecord]:
    """Cartesian sweep over the configured axes, one row per point.

    Points run on a bounded worker pool; aggregation is ordered by the axis
    tuple so the output is independent of completion order.  Per-point
    failures are recorded and the sweep continues.
    """
    points = _sweep_points(config)
    if points == [{}]:
        return [run_scenario(config, outdir=outdir, threads=threads)]
    run_dir = _run_dir(config, outdir, suffix="-sweep")
    digest = config.digest()

    def one(point: dict[str, float]) -> RunRecord | Exception:
        sub = _apply_point(config, point)
        try:
            rec = run_scenario(sub, outdir=run_dir)
        except Exception as exc:  # recorded per point, sweep continues
            return exc
        rec.sweep_point = point
        return rec

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, points))
    else:
        results = [one(p) for p in points]

    axes = sorted(config.sweep)
    header = axes + [
        "n_a",
        "indistinguishability",
        "d1",
        "d2",
        "exciton_after_pulse",
        "status",
    ]
    rows = []
    records: list[RunRecord] = []
    for point, res in zip(points, results):
        axis_vals = [point[a] for a in axes]
        if isinstance(res, Exception):
            rows.append(axis_vals + ["nan"] * 5 + [f"error: {res}"])
            continue
        records.append(res)
        fom = res.fom
        rows.append(
            axis_vals
            + [
                fom.n_a if fom else float("nan"),
                fom.indist if fom else float("nan"),
                fom.d1 if fom else float("nan"),
                fom.d2 if fom else float("nan"),
                res.after_pulse.get("exciton", float("nan")),
                "ok" if not res.warnings else "warned",
            ]
        )
    rows.sort(key=lambda r: tuple(r[: len(axes)]))
    _write_csv(os.path.join(run_dir, "sweep.csv"), header, rows, digest)
    return records


def compare_dissipators(
    config: ScenarioConfig, outdir: str | None = None
) -> tuple[str, dict[str, Trajectory]]:
    """Overlay populations for the interchangeable phonon scattering terms.

    Runs the full weak-coupling, simplified and polaron dissipators on one
    two-level scenario over a common pulse-centered window and writes the
    population series side by side.
    """
    if config.scheme == "tpe_biexciton":
        raise ValueError("dissipator comparison is defined for two-level schemes")
    if config.pulse_area is None:
        raise ValueError("dissipator comparison needs a fixed pulse area")
    model = build_model(config)
    dt, _ = resolve_numerics(config, model)
    t_end = model.pulse.center + 6.0 * model.pulse.tau_p
    stride = max(1, round(t_end / (600.0 * dt)))
    n_steps = int(np.ceil(t_end / (dt * stride))) * stride
    grid = TimeGrid(0.0, n_steps * dt, dt, sample_stride=stride)
    kinds = [
        DissipatorKind.WEAK_FULL,
        DissipatorKind.WEAK_SIMPLIFIED,
        DissipatorKind.POLARON,
    ]
    trajectories: dict[str, Trajectory] = {}
    for kind in kinds:
        trajectories[kind.value] = integrate(model.ground_state(), grid, model, kind)
    run_dir = _run_dir(config, outdir, suffix="-compare")
    header = ["t_ps"]
    columns = [trajectories[kinds[0].value].times]
    for kind in kinds:
        for obs in ("exciton", "photon"):
            header.append(f"{obs}_{kind.value}")
            columns.append(trajectories[kind.value].observables[obs])
    path = os.path.join(run_dir, "dissipator_compare.csv")
    _write_csv(path, header, zip(*columns), config.digest())
    return path, trajectories
