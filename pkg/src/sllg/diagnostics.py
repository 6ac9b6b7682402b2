"""Scalar observables: norms, constraint residuals, interpolation ratios, regularity fits."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import InsufficientDataError, PreconditionError
from .model import ModelParams, energy
from .spectral import TorusGrid, VectorField

RECORD_FIELDS = (
    "t",
    "l2_norm",
    "h1_seminorm",
    "h2_norm",
    "energy",
    "unit_deviation",
    "tangency_residual",
    "charge",
)


class ConvergenceWarning(UserWarning):
    """Error samples fed to a convergence fit are not monotone."""


@dataclass
class DiagnosticsRecord:
    t: float
    l2_norm: float
    h1_seminorm: float
    h2_norm: float
    energy: float
    unit_deviation: float
    tangency_residual: float
    charge: Optional[float] = None

    def as_row(self) -> dict:
        return asdict(self)


def grid_of(u: np.ndarray) -> TorusGrid:
    """Grid implied by a scalar sample array of shape ``(n,) * dim``."""
    if u.ndim not in (1, 2, 3) or len(set(u.shape)) != 1:
        raise ValueError(f"cannot infer a torus grid from shape {u.shape}")
    return TorusGrid(u.ndim, u.shape[0])


def unit_deviation(m: VectorField) -> float:
    """``max_x | |m(x)| - 1 |`` over the grid."""
    return float(np.max(np.abs(m.magnitude() - 1.0)))


def tangency_residual(m: VectorField) -> float:
    """Largest L2 norm of ``(m, d_j m)`` over the axes; zero for unit-length fields."""
    grid = m.grid
    return max(
        grid.l2_norm(np.sum(m.values * dm, axis=0)) for dm in grid.gradient(m.values)
    )


def compute_record(
    m: VectorField, params: ModelParams, t: float, charge: Optional[float] = None
) -> DiagnosticsRecord:
    grid = m.grid
    return DiagnosticsRecord(
        t=float(t),
        l2_norm=grid.l2_norm(m.values),
        h1_seminorm=grid.sobolev_seminorm(m.values, 1),
        h2_norm=grid.sobolev_norm(m.values, 2),
        energy=energy(m, params),
        unit_deviation=unit_deviation(m),
        tangency_residual=tangency_residual(m),
        charge=charge,
    )


def _nonzero(u: np.ndarray, grid: TorusGrid) -> float:
    n = grid.l2_norm(u)
    if n == 0.0:
        raise PreconditionError("ratio undefined for the zero field")
    return n


def agmon_ratio(u: np.ndarray, dim: Optional[int] = None) -> float:
    """``|u|_inf / (|u|_2^a |u|_H2^(1-a))`` with ``a = 1 - dim/4``.

    ``a`` is 1/4 in three dimensions and 1/2 in two.
    """
    u = np.asarray(u, dtype=float)
    grid = grid_of(u)
    dim = grid.dim if dim is None else dim
    if dim != grid.dim:
        raise ValueError(f"dim={dim} does not match sample array of dimension {grid.dim}")
    alpha = 1.0 - dim / 4.0
    l2 = _nonzero(u, grid)
    h2 = grid.sobolev_norm(u, 2)
    return float(np.max(np.abs(u))) / (l2**alpha * h2 ** (1.0 - alpha))


def grad_l4_ratio(u: np.ndarray) -> float:
    """``|grad u|_L4 / (|u|_2^(1/4) |u|_H2^(3/4))``, L4 by grid quadrature."""
    u = np.asarray(u, dtype=float)
    grid = grid_of(u)
    l2 = _nonzero(u, grid)
    h2 = grid.sobolev_norm(u, 2)
    grad_sq = sum(g**2 for g in grid.gradient(u))
    l4 = float(np.mean(grad_sq**2)) ** 0.25
    return l4 / (l2**0.25 * h2**0.75)


def product_ratio(u: np.ndarray, v: np.ndarray) -> float:
    """``|uv|_H2 / (|u|_H2 |v|_inf + |v|_H2 |u|_inf)`` for scalar fields."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    grid = grid_of(u)
    num = grid.sobolev_norm(u * v, 2)
    den = grid.sobolev_norm(u, 2) * np.max(np.abs(v)) + grid.sobolev_norm(v, 2) * np.max(np.abs(u))
    if den == 0.0:
        raise PreconditionError("ratio undefined for zero fields")
    return float(num / den)


def holder_exponent_estimate(
    snapshots,
    lags: Optional[Sequence[int]] = None,
    min_snapshots: int = 16,
) -> float:
    """Fit the exponent ``b`` in ``E |m(t + tau) - m(t)| ~ tau^b``.

    ``snapshots`` is a trajectory (anything with a ``snapshots`` attribute) or
    a sequence of equally spaced samples. ``lags`` are index offsets and default
    to the powers of two up to a quarter of the series length. Increments use
    the Euclidean norm of the flattened difference, which is the grid L2 norm
    up to a constant factor that does not affect the slope.

    Returns ``nan`` when every increment vanishes (constant trajectory).
    """
    data = getattr(snapshots, "snapshots", snapshots)
    series = np.asarray([np.ravel(s) for s in data], dtype=float)
    n = series.shape[0]
    if n < min_snapshots:
        raise InsufficientDataError(f"need at least {min_snapshots} snapshots, got {n}")
    if lags is None:
        lags = [2**j for j in range(int(math.log2(max(n // 4, 1))) + 1)]
    lags = [int(l) for l in lags if 0 < int(l) < n]
    if len(lags) < 2:
        raise InsufficientDataError("need at least two usable lags")
    means = np.array(
        [np.mean(np.linalg.norm(series[l:] - series[:-l], axis=1)) for l in lags]
    )
    if np.all(means == 0.0):
        return math.nan
    if np.any(means == 0.0):
        raise InsufficientDataError("some lags show zero increments; exponent ill-defined")
    slope, _ = np.polyfit(np.log(lags), np.log(means), 1)
    return float(slope)


@dataclass
class DifferenceSeries:
    times: np.ndarray
    differences: np.ndarray
    running_max: np.ndarray

    @property
    def sup(self) -> float:
        return float(self.running_max[-1]) if self.running_max.size else 0.0


def l2_difference_series(traj_a, traj_b, rtol: float = 1e-12) -> DifferenceSeries:
    """``|m_a(t) - m_b(t)|_L2`` at matched snapshot times.

    Fields on different grids are compared on the finer one after spectral
    zero-embedding of the coarser field.
    """
    ta = np.asarray(traj_a.times, dtype=float)
    tb = np.asarray(traj_b.times, dtype=float)
    if ta.shape != tb.shape or not np.allclose(ta, tb, rtol=rtol, atol=0.0):
        raise PreconditionError("snapshot times of the two trajectories do not match")
    ga, gb = traj_a.grid, traj_b.grid
    if ga.dim != gb.dim:
        raise PreconditionError("trajectories have different spatial dimension")
    fine = ga if ga.n >= gb.n else gb
    diffs = np.empty(ta.size)
    for i, (a, b) in enumerate(zip(traj_a.snapshots, traj_b.snapshots)):
        a = ga.resample(a, fine.n)
        b = gb.resample(b, fine.n)
        diffs[i] = fine.l2_norm(a - b)
    return DifferenceSeries(ta, diffs, np.maximum.accumulate(diffs))


def convergence_order(errors: Sequence[float], parameters: Optional[Sequence[float]] = None) -> float:
    """Least-squares slope of ``log(error)`` against ``log(parameter)``.

    ``parameters`` default to successive halvings ``1, 1/2, 1/4, ...``. A
    :class:`ConvergenceWarning` is issued when errors do not decrease
    monotonically with the parameter; the slope is still returned.
    """
    errors = np.asarray(errors, dtype=float)
    if errors.size < 3:
        raise InsufficientDataError("need at least three error samples")
    if parameters is None:
        parameters = 0.5 ** np.arange(errors.size)
    parameters = np.asarray(parameters, dtype=float)
    if parameters.shape != errors.shape:
        raise ValueError("errors and parameters must have the same length")
    if np.any(errors <= 0) or np.any(parameters <= 0):
        raise ValueError("errors and parameters must be positive for a log-log fit")
    order = np.argsort(parameters)
    if not np.all(np.diff(errors[order]) >= 0):
        warnings.warn("errors are not monotone in the parameter", ConvergenceWarning, stacklevel=2)
    slope, _ = np.polyfit(np.log(parameters), np.log(errors), 1)
    return float(slope)
