"""Reproducible studies built on the integrator: simulation runs, refinement
experiments, scheme cross-checks and topology tracking.

Every report is a plain dict that embeds the resolved run configuration, so a
JSON dump of it is self-describing. Reports never contain wall-clock data;
the same configuration produces the same bytes.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .brownian import BrownianPath, refine_brownian, sample_brownian
from .config import RunConfig
from .diagnostics import convergence_order, l2_difference_series
from .errors import ConfigError, PreconditionError
from .integrator import SchemeConfig, Trajectory, integrate
from .io import DiagnosticsCSV, SnapshotFile
from .model import ModelParams
from .spectral import TorusGrid, VectorField
from .topology import certify, degree_2d, hopf_invariant_3d, track_invariant

REPORT_VERSION = 1


def parallel_map(fn: Callable, items: Sequence, jobs: int = 1) -> list:
    """``[fn(x) for x in items]``, optionally across processes; order is preserved."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def dump_report(report: dict, path) -> None:
    Path(path).write_text(json.dumps(report, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"not serializable: {type(o).__name__}")


# --- the rotation oracle -----------------------------------------------------


def rotation_solution(m0, h, b: float) -> np.ndarray:
    """Exact solution of ``dm = (m x h) o dB`` for constant ``m0`` and ``h``.

    ``m x h = -h x m``, so ``m`` turns about ``h / |h|`` by the angle
    ``-|h| B``; Rodrigues' formula evaluates the rotation.
    """
    m0 = np.asarray(m0, dtype=float)
    h = np.asarray(h, dtype=float)
    norm = np.linalg.norm(h)
    if norm == 0.0:
        return m0.copy()
    u = h / norm
    phi = -norm * b
    c, s = np.cos(phi), np.sin(phi)
    return m0 * c + np.cross(u, m0) * s + u * np.dot(u, m0) * (1.0 - c)


ROTATION_GRID = TorusGrid(1, 4)


def _rotation_run(m0, h, path: BrownianPath, scheme: SchemeConfig) -> np.ndarray:
    m = VectorField.constant(ROTATION_GRID, np.asarray(m0, dtype=float))
    params = ModelParams(1.0, 0.1, (tuple(h),))
    traj = integrate(
        m, params, path, scheme,
        snapshot_stride=path.steps, record_diagnostics=False, check_l2_bound=False,
    )
    return traj.final.values[:, 0]


def rotation_errors(
    seeds: Sequence[int],
    scheme: SchemeConfig = SchemeConfig("stratonovich-heun", l2_projection=False),
    m0=(1.0, 0.0, 0.0),
    h=(0.0, 0.0, 1.0),
    T: float = 1.0,
    base_steps: int = 64,
    levels: int = 5,
) -> dict:
    """Strong error at ``T`` against the closed-form rotation, on bridge-refined paths.

    Returns per-seed errors (rows) for ``dt = T / (base_steps 2^i)``, their
    seed average and the fitted order.
    """
    per_seed = np.empty((len(seeds), levels))
    for r, seed in enumerate(seeds):
        path = sample_brownian(seed, T, base_steps)
        exact = rotation_solution(m0, h, path.values[0, -1])
        for i in range(levels):
            p = refine_brownian(path, i)
            per_seed[r, i] = np.linalg.norm(_rotation_run(m0, h, p, scheme) - exact)
    dts = T / (base_steps * 2.0 ** np.arange(levels))
    mean = per_seed.mean(axis=0)
    return {"dts": dts, "errors": mean, "per_seed": per_seed, "order": convergence_order(mean, dts)}


def _pair_difference(args) -> list:
    seed, m0, h, T, base_steps, levels, check = args
    heun = SchemeConfig("stratonovich-heun", l2_projection=False)
    path = sample_brownian(seed, T, base_steps)
    row = []
    for i in range(levels):
        p = refine_brownian(path, i)
        row.append(np.linalg.norm(_rotation_run(m0, h, p, heun) - _rotation_run(m0, h, p, check)))
    return row


def rotation_scheme_check(
    seeds: Sequence[int],
    m0=(1.0, 0.0, 0.0),
    h=(0.0, 0.0, 1.0),
    T: float = 1.0,
    base_steps: int = 64,
    levels: int = 5,
    bias_steps: int = 1000,
    jobs: int = 1,
) -> dict:
    """Heun against corrected Euler on the rotation test.

    Both schemes run without any norm projection, since a projection would
    hide a missing Ito correction. Reports the seed-averaged terminal
    differences per ``dt`` with their slope, and at ``dt = T / bias_steps`` the
    differences to Euler with and without the correction.
    """
    corrected = SchemeConfig("ito-euler-corrected", l2_projection=False)
    uncorrected = SchemeConfig("ito-euler-corrected", l2_projection=False, ito_correction=False)
    heun = SchemeConfig("stratonovich-heun", l2_projection=False)
    args = [(s, m0, h, T, base_steps, levels, corrected) for s in seeds]
    diffs = np.array(parallel_map(_pair_difference, args, jobs))
    dts = T / (base_steps * 2.0 ** np.arange(levels))
    mean = diffs.mean(axis=0)
    c, u = [], []
    for s in seeds:
        path = sample_brownian(s, T, bias_steps)
        ref = _rotation_run(m0, h, path, heun)
        c.append(np.linalg.norm(ref - _rotation_run(m0, h, path, corrected)))
        u.append(np.linalg.norm(ref - _rotation_run(m0, h, path, uncorrected)))
    return {
        "dts": dts,
        "differences": mean,
        "slope": convergence_order(mean, dts),
        "bias_dt": T / bias_steps,
        "corrected_difference": float(np.mean(c)),
        "uncorrected_difference": float(np.mean(u)),
        "bias_ratio": float(np.mean(u) / np.mean(c)),
    }


# --- config-driven runs ------------------------------------------------------


def brownian_for(config: RunConfig, n_noises: int, level: int = 0) -> Optional[BrownianPath]:
    """The run's Brownian path, refined ``level`` times; ``None`` for ``T = 0``.

    Without noise the path carries no Brownian motions and only fixes ``dt``.
    """
    if config.T == 0:
        return None
    path = sample_brownian(config.seed, config.T, config.steps, n_noises)
    return refine_brownian(path, level)


def run_config(
    config: RunConfig,
    path: Optional[BrownianPath] = None,
    record_diagnostics: bool = True,
    check_l2_bound: bool = True,
) -> Trajectory:
    grid = config.grid()
    params = config.model_params(grid)
    m0 = config.initial_field(grid)
    if path is None:
        path = brownian_for(config, params.n_noises)
    stride = config.snapshot_stride
    if path is not None and path.steps != config.steps:
        stride *= path.steps // config.steps
    return integrate(
        m0,
        params,
        path,
        config.scheme_config(),
        snapshot_stride=stride,
        record_diagnostics=record_diagnostics,
        check_l2_bound=check_l2_bound,
    )


def _charges(traj: Trajectory) -> None:
    if traj.grid.dim != 2:
        return
    for i, rec in enumerate(traj.records):
        try:
            rec.charge = degree_2d(traj.field(i)).raw
        except PreconditionError:
            rec.charge = None


def write_run(config: RunConfig, traj: Trajectory, out: Path) -> list:
    """Snapshots, diagnostics CSV and the resolved config, written under ``out``."""
    out.mkdir(parents=True, exist_ok=True)
    seed = traj.seed
    files = []
    for i, t in enumerate(traj.times):
        snap = SnapshotFile(traj.field(i), t, config.lam, config.eps, seed, config.scheme)
        name = out / f"snapshot_{i:05d}.sllg"
        snap.write(name)
        files.append(name)
    csv_path = out / "diagnostics.csv"
    if csv_path.exists():
        csv_path.unlink()
    DiagnosticsCSV(csv_path).append(traj.records)
    config.save(out / "config.ini")
    return files


def simulate(config: RunConfig, out: Optional[Path] = None) -> dict:
    """Run ``config`` and persist it. Numerical failures flush the partial run
    plus the last accepted state and then re-raise."""
    out = out or config.resolved_output_dir()
    try:
        traj = run_config(config)
    except ArithmeticError as exc:
        partial = getattr(exc, "trajectory", None)
        if partial is not None:
            _charges(partial)
            write_run(config, partial, out)
            t, m = exc.last_good
            SnapshotFile(
                VectorField(partial.grid, m), t, config.lam, config.eps, partial.seed, config.scheme
            ).write(out / "last_good.sllg")
        raise
    _charges(traj)
    write_run(config, traj, out)
    report = {
        "version": REPORT_VERSION,
        "command": "simulate",
        "config": config.to_dict(),
        "snapshots": len(traj.times),
        "final_time": traj.times[-1],
        "max_l2_ratio": traj.max_l2_ratio,
        "sup_h2_norm": max(r.h2_norm for r in traj.records),
        "final": traj.records[-1].as_row(),
    }
    if not np.isfinite(report["sup_h2_norm"]):
        raise FloatingPointError("H2 norm is not finite along the run")
    dump_report(report, out / "report.json")
    return report


def _run_cutoff(args) -> Trajectory:
    config, path = args
    return run_config(config, path, record_diagnostics=False)


def uniqueness(config: RunConfig, cutoffs: Sequence[float], control: bool = True, jobs: int = 1) -> dict:
    """Integrate every cutoff on the same Brownian path and compare.

    ``sup_matrix[i][j]`` is ``sup_t |m_i(t) - m_j(t)|_L2``. ``ratios`` are the
    successive sup-differences ``d(i, i+1) / d(i+1, i+2)`` and ``reproducible``
    states that a repeat of the last cutoff is bitwise identical. The control
    reruns the last cutoff with an independent seed.
    """
    if len(cutoffs) < 2:
        raise ConfigError("uniqueness needs at least two cutoffs")
    params = config.model_params()
    path = brownian_for(config, params.n_noises)
    configs = [replace(config, cutoff=float(c)) for c in cutoffs]
    trajs = parallel_map(_run_cutoff, [(c, path) for c in configs], jobs)
    k = len(trajs)
    sup = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            sup[i, j] = sup[j, i] = l2_difference_series(trajs[i], trajs[j]).sup
    successive = [sup[i, i + 1] for i in range(k - 1)]
    ratios = [successive[i] / successive[i + 1] if successive[i + 1] > 0 else np.inf for i in range(k - 2)]
    repeat = _run_cutoff((configs[-1], path))
    reproducible = all(
        np.array_equal(a, b) for a, b in zip(repeat.snapshots, trajs[-1].snapshots)
    )
    report = {
        "version": REPORT_VERSION,
        "command": "uniqueness",
        "config": config.to_dict(),
        "cutoffs": [float(c) for c in cutoffs],
        "sup_matrix": sup,
        "successive": successive,
        "ratios": ratios,
        "reproducible": reproducible,
    }
    if control:
        other = replace(configs[-1], seed=config.seed + 1)
        ctrl = run_config(other, record_diagnostics=False)
        report["control_seed"] = other.seed
        report["control_difference"] = l2_difference_series(trajs[-1], ctrl).sup
    return report


def converge(config: RunConfig, levels: int = 4) -> dict:
    """Time-step refinement on one bridge-refined path.

    The finest level serves as reference; errors are terminal L2 differences
    of the coarser levels and the fitted order uses their ``dt``.
    """
    if levels < 4:
        raise ConfigError("converge needs at least four levels (three errors plus a reference)")
    params = config.model_params()
    base = brownian_for(config, params.n_noises)
    if base is None:
        raise ConfigError("converge needs T > 0")
    finals = []
    for i in range(levels):
        path = refine_brownian(base, i)
        traj = run_config(config, path, record_diagnostics=False)
        finals.append(traj.final.values)
    grid = config.grid()
    errors = [grid.l2_norm(f - finals[-1]) for f in finals[:-1]]
    dts = [config.dt / 2**i for i in range(levels - 1)]
    return {
        "version": REPORT_VERSION,
        "command": "converge",
        "config": config.to_dict(),
        "dts": dts,
        "errors": errors,
        "order": convergence_order(errors, dts) if min(errors) > 0 else float("inf"),
    }


def scheme_check(config: RunConfig, levels: int = 3, seeds: int = 1, jobs: int = 1) -> dict:
    """Heun against corrected Euler for ``config`` on dyadic ``dt`` levels.

    Uses the configured initial data, noise and cutoff; projections are off so
    that both schemes are run in their plain form. Also reports the terminal
    difference with the Ito correction omitted at the finest level.
    """
    if levels < 3:
        raise ConfigError("scheme-check needs at least three dt values")
    heun = replace(config, scheme="stratonovich-heun", l2_projection=False, renormalize=False)
    euler = replace(heun, scheme="ito-euler-corrected")
    bare = replace(euler, ito_correction=False)
    grid = config.grid()
    n_noises = config.model_params(grid).n_noises
    diffs = np.zeros(levels)
    bias = 0.0
    corrected_fine = 0.0
    for s in range(config.seed, config.seed + seeds):
        base = brownian_for(replace(config, seed=s), n_noises)
        if base is None:
            raise ConfigError("scheme-check needs T > 0")
        for i in range(levels):
            path = refine_brownian(base, i)
            a, b = parallel_map(
                _final_state, [(heun, path), (euler, path)], jobs
            )
            diffs[i] += grid.l2_norm(a - b) / seeds
        c = _final_state((bare, path))
        bias += grid.l2_norm(a - c) / seeds
        corrected_fine += grid.l2_norm(a - b) / seeds
    dts = [config.dt / 2**i for i in range(levels)]
    positive = bool(np.all(diffs > 0))
    return {
        "version": REPORT_VERSION,
        "command": "scheme-check",
        "config": config.to_dict(),
        "dts": dts,
        "differences": diffs,
        "slope": convergence_order(diffs, dts) if positive else float("inf"),
        "uncorrected_difference": bias,
        "corrected_difference": corrected_fine,
    }


def _final_state(args) -> np.ndarray:
    config, path = args
    return run_config(config, path, record_diagnostics=False, check_l2_bound=False).final.values


def topology(
    config: RunConfig,
    stride: int = 1,
    drift_tolerance: float = 1e-2,
    residual_threshold: float = 5e-2,
) -> dict:
    """Track the degree (2D) or Hopf invariant (3D) along a run.

    Certified means the integer is the same at the start and the end, the
    starting residual is below ``residual_threshold`` and the drift stays
    within ``drift_tolerance``.
    """
    grid = config.grid()
    if grid.dim == 2:
        invariant = degree_2d
    elif grid.dim == 3:
        invariant = hopf_invariant_3d
    else:
        raise ConfigError("topology tracking needs dim 2 or 3")
    # obstructions in the initial data are configuration errors, not tracking failures
    invariant(config.initial_field(grid))
    traj = run_config(config, record_diagnostics=False)
    series = track_invariant(traj, invariant, stride)
    first, last = series.reports[0], series.reports[-1]
    certified = (
        certify([first, last], residual_threshold) and series.max_drift <= drift_tolerance
    )
    return {
        "version": REPORT_VERSION,
        "command": "topology",
        "config": config.to_dict(),
        "invariant": first.kind,
        "times": series.times,
        "values": series.values,
        "initial": first.as_dict(),
        "final": last.as_dict(),
        "max_drift": series.max_drift,
        "certified": bool(certified),
    }
