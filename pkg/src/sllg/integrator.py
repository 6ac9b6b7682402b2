"""Time stepping of the Galerkin-truncated stochastic LLG system.

Three schemes are provided:

``stratonovich-heun``
    Predictor-corrector with midpoint-averaged drift and noise. With a single
    driving noise (or commuting noise fields) this is consistent with the
    Stratonovich integral and has strong order one.
``ito-euler-corrected``
    Euler-Maruyama on the Ito form, i.e. with the drift augmented by
    ``1/2 sum (m x h_k) x h_k``. Strong order one half. Used as an independent
    cross-check of the Heun scheme.
``imex-heun``
    Heun with a stiff linear term ``-sigma eps^2 Lap^2 m`` treated by backward
    Euler in Fourier space and ``drift(m) + sigma eps^2 Lap^2 m`` kept
    explicit, so the splitting is exact whatever ``|m|``. On the unit sphere
    the damping contributes ``-lam eps^2 Lap^2 m`` and the precession a
    dispersive ``eps^2 m x Lap^2 m``; linearized about a constant state the
    amplification stays below one for every ``dt`` once
    ``sigma >= (1 + lam^2) / (2 lam)``, hence
    ``sigma = max(lam, (1 + lam^2) / (2 lam))``. Around strongly varying
    states the explicit remainder still carries stiff terms of size
    ``eps^2 |grad m| |k|^3``, so steep profiles need a smaller ``dt``.

Every stage is projected onto the Galerkin space. The exact Galerkin flow
conserves the L2 norm, because both drift and noise are pointwise orthogonal to
``m``; explicit schemes only do so up to ``O(dt^2)`` per step. With
``l2_projection`` on, the state is rescaled back onto the L2 sphere it started
on after every step (a standard invariant-manifold projection that keeps the
scheme's order). ``renormalize`` instead projects pointwise onto the unit
sphere and supersedes the L2 rescaling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .brownian import BrownianPath
from .diagnostics import DiagnosticsRecord, compute_record, unit_deviation
from .errors import L2BoundViolation, NumericalBlowupError, PreconditionError
from .model import (
    ModelParams,
    drift_array,
    gradient_multiplier,
    ito_correction_array,
)
from .spectral import FOUR_PI_SQ, SpectralCutoff, TorusGrid, VectorField, cross_arrays

SCHEMES = ("stratonovich-heun", "ito-euler-corrected", "imex-heun")
L2_SLACK = 1e-6
UNIT_TOLERANCE = 1e-6
# Accumulated raw L2 growth (product of the per-step ratios before rescaling)
# at which a run is declared unstable. Consistent steps change the norm by
# O(dt^2) each, so legitimate runs stay orders of magnitude below this.
RAW_GROWTH_LIMIT = 0.1


@dataclass(frozen=True)
class SchemeConfig:
    scheme: str = "stratonovich-heun"
    renormalize: bool = False
    cutoff: Optional[SpectralCutoff] = None
    dealias: bool = False
    l2_projection: bool = True
    ito_correction: bool = True

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")


Observer = Callable[[int, float, VectorField], None]


class GalerkinSystem:
    """Right-hand sides of the projected equation on one grid, with cached multipliers."""

    def __init__(self, grid: TorusGrid, params: ModelParams, scheme: SchemeConfig):
        self.grid = grid
        self.params = params
        self.scheme = scheme
        r2 = None if scheme.cutoff is None else scheme.cutoff.radius_squared
        if r2 is not None and r2 >= grid.max_radius_squared:
            r2 = None
        self.mask = None if r2 is None else grid.cutoff_mask(r2)
        self.grad_mult = gradient_multiplier(grid, params.eps)
        lam = params.lam
        self.sigma = max(lam, (1.0 + lam**2) / (2.0 * lam))
        self.stiff = self.sigma * params.eps**2 * (FOUR_PI_SQ * grid.ksq) ** 2
        self.hs = params.noise_arrays(grid)
        if scheme.dealias:
            n_pad = -(-3 * grid.n // 2)
            self.n_pad = n_pad + (n_pad % 2)
        else:
            self.n_pad = grid.n

    def project(self, a: np.ndarray) -> np.ndarray:
        if self.mask is None:
            return a
        return self.grid.ifft(self.grid.fft(a) * self.mask)

    def drift(self, m: np.ndarray) -> np.ndarray:
        """Unprojected drift; nonlinear products optionally on a 3/2-padded grid."""
        grid = self.grid
        G = grid.ifft(self.grad_mult * grid.fft(m))
        if self.n_pad == grid.n:
            return drift_array(m, G, self.params.lam)
        fine = TorusGrid(grid.dim, self.n_pad)
        d = drift_array(grid.resample(m, self.n_pad), grid.resample(G, self.n_pad), self.params.lam)
        return fine.resample(d, grid.n)

    def noise(self, m: np.ndarray, dB: np.ndarray) -> np.ndarray:
        out = np.zeros_like(m)
        for h, db in zip(self.hs, dB):
            out += db * cross_arrays(m, h)
        return out

    def increment(self, m: np.ndarray, dt: float, dB: np.ndarray) -> np.ndarray:
        """``P(drift(m) dt + sum_k (m x h_k) dB_k)``."""
        return self.project(self.drift(m) * dt + self.noise(m, dB))


def _check_increments(system: GalerkinSystem, dB) -> np.ndarray:
    dB = np.atleast_1d(np.asarray(dB, dtype=float))
    if dB.size < len(system.hs):
        raise PreconditionError(
            f"{len(system.hs)} noise fields but only {dB.size} Brownian increments"
        )
    return dB


def _heun(system: GalerkinSystem, m: np.ndarray, dt: float, dB: np.ndarray) -> np.ndarray:
    k1 = system.increment(m, dt, dB)
    k2 = system.increment(m + k1, dt, dB)
    return m + 0.5 * (k1 + k2)


def _euler_ito(system: GalerkinSystem, m: np.ndarray, dt: float, dB: np.ndarray) -> np.ndarray:
    rhs = system.drift(m) * dt + system.noise(m, dB)
    if system.scheme.ito_correction:
        rhs += ito_correction_array(m, system.hs) * dt
    return m + system.project(rhs)


def _imex_heun(system: GalerkinSystem, m: np.ndarray, dt: float, dB: np.ndarray) -> np.ndarray:
    grid = system.grid
    denom = 1.0 + dt * system.stiff

    def explicit_hat(a: np.ndarray):
        ahat = grid.fft(a)
        inc = grid.fft(system.drift(a) * dt + system.noise(a, dB)) + dt * system.stiff * ahat
        if system.mask is not None:
            inc *= system.mask
        return ahat, inc

    mhat, inc1 = explicit_hat(m)
    pred = grid.ifft((mhat + inc1) / denom)
    _, inc2 = explicit_hat(pred)
    return grid.ifft((mhat + 0.5 * (inc1 + inc2)) / denom)


_STEPPERS = {
    "stratonovich-heun": _heun,
    "ito-euler-corrected": _euler_ito,
    "imex-heun": _imex_heun,
}


def _finish(
    system: GalerkinSystem,
    m_old: np.ndarray,
    m_new: np.ndarray,
    step: int,
    stats: Optional[dict] = None,
) -> np.ndarray:
    """Blowup check, then renormalization or L2 rescaling.

    With ``stats`` given, the raw one-step L2 ratios are accumulated in
    ``stats["log"]`` and the largest accumulated growth is kept in
    ``stats["growth"]``; growth beyond ``RAW_GROWTH_LIMIT`` raises
    :class:`L2BoundViolation`. This is how instability shows up when the
    rescaling would otherwise hide it.
    """
    grid = system.grid
    if not np.all(np.isfinite(m_new)):
        raise NumericalBlowupError(step)
    if stats is not None:
        stats["log"] += np.log(grid.l2_norm(m_new) / grid.l2_norm(m_old))
        growth = float(np.expm1(stats["log"]))
        stats["growth"] = max(stats["growth"], growth)
        if growth > RAW_GROWTH_LIMIT:
            raise L2BoundViolation(step, 1.0 + growth)
    if system.scheme.renormalize:
        mag = np.sqrt(np.sum(m_new**2, axis=0))
        if np.any(mag == 0.0):
            raise NumericalBlowupError(step, f"zero magnetization at step {step}; cannot renormalize")
        m_new = m_new / mag
    elif system.scheme.l2_projection:
        target = grid.l2_norm(m_old)
        current = grid.l2_norm(m_new)
        if current > 0.0:
            m_new = m_new * (target / current)
    return m_new


def step_heun(m: VectorField, params: ModelParams, scheme: SchemeConfig, dt: float, dB) -> VectorField:
    """One Stratonovich-Heun step of size ``dt`` with Brownian increments ``dB``."""
    system = GalerkinSystem(m.grid, params, scheme)
    return VectorField(m.grid, _advance_with(system, _heun, m.values, dt, dB))


def step_euler_ito(m: VectorField, params: ModelParams, scheme: SchemeConfig, dt: float, dB) -> VectorField:
    """One Euler-Maruyama step on the Ito form (correction controlled by ``scheme.ito_correction``)."""
    system = GalerkinSystem(m.grid, params, scheme)
    return VectorField(m.grid, _advance_with(system, _euler_ito, m.values, dt, dB))


def step_imex_heun(m: VectorField, params: ModelParams, scheme: SchemeConfig, dt: float, dB) -> VectorField:
    system = GalerkinSystem(m.grid, params, scheme)
    return VectorField(m.grid, _advance_with(system, _imex_heun, m.values, dt, dB))


def _advance_with(system, stepper, m, dt, dB, step: int = 0):
    dB = _check_increments(system, dB)
    return _finish(system, m, stepper(system, m, dt, dB), step)


@dataclass
class Trajectory:
    """Snapshots and diagnostics of one run."""

    grid: TorusGrid
    params: ModelParams
    scheme: SchemeConfig
    seed: Optional[int]
    times: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    records: list = field(default_factory=list)
    max_l2_ratio: float = 0.0
    max_raw_growth: float = 0.0

    def field(self, i: int) -> VectorField:
        return VectorField(self.grid, self.snapshots[i])

    @property
    def final(self) -> VectorField:
        return self.field(-1)

    def append(self, t: float, m: np.ndarray, record: Optional[DiagnosticsRecord]) -> None:
        self.times.append(float(t))
        self.snapshots.append(np.array(m, copy=True))
        if record is not None:
            self.records.append(record)


def integrate(
    m0: VectorField,
    params: ModelParams,
    path: Optional[BrownianPath],
    scheme: SchemeConfig = SchemeConfig(),
    observers: Sequence[Observer] = (),
    snapshot_stride: int = 1,
    check_l2_bound: bool = True,
    record_diagnostics: bool = True,
    check_unit: bool = True,
) -> Trajectory:
    """March the Galerkin system from ``m0`` to ``path.T``.

    ``m0`` must be unit length to within 1e-6 and is projected onto the Galerkin
    space first. Snapshots (and diagnostics records) are taken every
    ``snapshot_stride`` steps and at the final time; observers are called at the
    same instants. ``path=None`` means a zero-length run.

    When ``check_l2_bound`` is set, every step asserts
    ``|m(t)|_L2 <= |m0|_L2 (1 + 1e-6)`` and raises :class:`L2BoundViolation`
    otherwise. The same error is raised when the raw steps (before any
    rescaling) accumulate an L2 growth above ``RAW_GROWTH_LIMIT``; the largest
    accumulated raw growth is kept as ``max_raw_growth``. Numerical failures carry the partial trajectory as
    ``exc.trajectory`` and the last accepted state as ``exc.last_good``
    (a ``(t, values)`` pair).
    """
    if snapshot_stride < 1:
        raise ValueError("snapshot_stride must be >= 1")
    grid = m0.grid
    if check_unit:
        dev = unit_deviation(m0)
        if dev > UNIT_TOLERANCE:
            raise PreconditionError(f"initial field deviates from unit length by {dev:.3g}")
    system = GalerkinSystem(grid, params, scheme)
    m0_norm = grid.l2_norm(m0.values)
    m = system.project(np.array(m0.values, copy=True))
    seed = None if path is None else path.seed
    traj = Trajectory(grid, params, scheme, seed)
    traj.max_l2_ratio = grid.l2_norm(m) / m0_norm

    def observe(step: int, t: float, m: np.ndarray) -> None:
        rec = compute_record(VectorField(grid, m), params, t) if record_diagnostics else None
        traj.append(t, m, rec)
        if observers:
            field_ = VectorField(grid, m.copy())
            for obs in observers:
                obs(step, t, field_)

    observe(0, 0.0, m)
    if path is None or path.steps == 0:
        return traj
    if path.n_noises < params.n_noises:
        raise PreconditionError(
            f"path carries {path.n_noises} Brownian motions, model needs {params.n_noises}"
        )
    dt = path.dt
    incs = path.increments
    stepper = _STEPPERS[scheme.scheme]
    stats = {"growth": 0.0, "log": 0.0} if check_l2_bound else None
    for step in range(1, path.steps + 1):
        try:
            m_new = _finish(system, m, stepper(system, m, dt, incs[:, step - 1]), step, stats)
            if check_l2_bound:
                ratio = grid.l2_norm(m_new) / m0_norm
                traj.max_l2_ratio = max(traj.max_l2_ratio, ratio)
                if ratio > 1.0 + L2_SLACK:
                    raise L2BoundViolation(step, ratio)
        except (NumericalBlowupError, L2BoundViolation) as exc:
            exc.trajectory = traj
            exc.last_good = ((step - 1) * dt, m)
            raise
        m = m_new
        if stats is not None:
            traj.max_raw_growth = stats["growth"]
        if step % snapshot_stride == 0 or step == path.steps:
            observe(step, step * dt if step < path.steps else path.T, m)
    return traj
