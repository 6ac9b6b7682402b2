"""Homotopy invariants of sphere-valued fields on the torus.

``degree_2d`` integrates the pullback of the area form of S^2,

    Q = 1/(4 pi) int m . (d1 m x d2 m) dx.

``hopf_invariant_3d`` evaluates the Whitehead integral. With the emergent field
``B_i = 1/2 eps_ijk m . (d_j m x d_k m)`` (the pullback area form as a vector,
flux ``4 pi`` per unit degree) and a periodic potential ``curl A = B``,

    H = sign / (16 pi^2) int A . B dx.

A periodic ``A`` exists only when the mean of ``B`` (the flux through each
coordinate 2-torus) vanishes. Fluxes are quantized in units of ``4 pi``; the
gate compares them against ``flux_tolerance`` flux quanta so that the
discretization error of the flux itself does not trip it. ``A`` is taken in Coulomb gauge with zero mean,
which is diagonal in Fourier space. ``B`` is Leray-projected first, so the
integral is exactly gauge invariant on the grid. The overall sign is fixed so
that the closed twisted skyrmion string with ``q = 1`` and cross-section degree
+1 reports ``H = +1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    ConstraintViolationError,
    InvariantTrackingError,
    PreconditionError,
    TopologyObstructionError,
)
from .spectral import TWO_PI, TorusGrid, VectorField, cross_arrays

UNIT_GATE = 0.1
FLUX_TOLERANCE = 1e-2
HOPF_SIGN = 1.0


@dataclass
class InvariantReport:
    kind: str
    raw: float
    resolution: int
    fluxes: Optional[tuple] = None

    @property
    def nearest(self) -> int:
        return int(np.rint(self.raw))

    @property
    def residual(self) -> float:
        return abs(self.raw - self.nearest)

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "raw": self.raw,
            "nearest": self.nearest,
            "residual": self.residual,
            "resolution": self.resolution,
            "fluxes": None if self.fluxes is None else list(self.fluxes),
        }


def certify(reports: Sequence[InvariantReport], threshold: float) -> bool:
    """True when the last two refinements agree on the integer and both residuals are below ``threshold``."""
    if len(reports) < 2:
        return False
    a, b = reports[-2], reports[-1]
    return a.nearest == b.nearest and a.residual < threshold and b.residual < threshold


def _normalized(m: VectorField, dim: int) -> np.ndarray:
    if m.grid.dim != dim:
        raise PreconditionError(f"expected a {dim}-dimensional field, got dim={m.grid.dim}")
    mag = m.magnitude()
    dev = float(np.max(np.abs(mag - 1.0)))
    if dev >= UNIT_GATE:
        raise ConstraintViolationError(f"|m| deviates from 1 by {dev:.3g} (gate {UNIT_GATE})")
    return m.values / mag


def degree_2d(m: VectorField) -> InvariantReport:
    grid = m.grid
    n = _normalized(m, 2)
    d1, d2 = grid.gradient(n)
    density = np.sum(n * cross_arrays(d1, d2), axis=0)
    q = float(np.mean(density)) / (4.0 * np.pi)
    return InvariantReport("degree_2d", q, grid.n)


def emergent_field(m: VectorField) -> np.ndarray:
    """``B_i = m . (d_j m x d_k m)`` for cyclic ``(i, j, k)``, from the normalized field."""
    grid = m.grid
    n = _normalized(m, 3)
    d = grid.gradient(n)
    return np.stack(
        [np.sum(n * cross_arrays(d[(i + 1) % 3], d[(i + 2) % 3]), axis=0) for i in range(3)]
    )


def _k_vectors(grid: TorusGrid) -> list:
    return [TWO_PI * k for k in grid._k_axes_odd]


def coulomb_potential(B: np.ndarray, grid: TorusGrid) -> tuple:
    """Solenoidal part of ``B`` and its zero-mean Coulomb-gauge potential.

    Returns ``(A, B_sol)`` with ``curl A = B_sol`` and ``div A = 0``.
    """
    Bh = grid.fft(B)
    ks = _k_vectors(grid)
    kk = sum(k**2 for k in ks)
    safe = np.where(kk > 0, kk, 1.0)
    inv = np.where(kk > 0, 1.0 / safe, 0.0)
    kdotB = sum(k * Bh[i] for i, k in enumerate(ks))
    Bh = np.stack([np.where(kk > 0, Bh[i] - ks[i] * kdotB * inv, 0.0) for i in range(3)])
    # A_hat = i k x B_hat / |k|^2
    Ah = np.stack(
        [
            1j * (ks[1] * Bh[2] - ks[2] * Bh[1]) * inv,
            1j * (ks[2] * Bh[0] - ks[0] * Bh[2]) * inv,
            1j * (ks[0] * Bh[1] - ks[1] * Bh[0]) * inv,
        ]
    )
    return grid.ifft(Ah), grid.ifft(Bh)


def whitehead_integral(A: np.ndarray, B: np.ndarray, grid: TorusGrid) -> float:
    return HOPF_SIGN * grid.inner(A, B) / (16.0 * np.pi**2)


def hopf_invariant_3d(m: VectorField, flux_tolerance: float = FLUX_TOLERANCE) -> InvariantReport:
    grid = m.grid
    B = emergent_field(m)
    fluxes = tuple(float(f) for f in np.mean(B, axis=grid.axes))
    if max(abs(f) for f in fluxes) > flux_tolerance * 4.0 * np.pi:
        raise TopologyObstructionError(fluxes)
    A, B_sol = coulomb_potential(B, grid)
    return InvariantReport("hopf_3d", whitehead_integral(A, B_sol, grid), grid.n, fluxes)


INVARIANTS = {"degree_2d": degree_2d, "hopf_3d": hopf_invariant_3d}


@dataclass
class InvariantSeries:
    times: np.ndarray
    values: np.ndarray
    reports: list

    @property
    def max_drift(self) -> float:
        if self.values.size == 0:
            return 0.0
        return float(np.max(np.abs(self.values - self.values[0])))


def track_invariant(
    trajectory, invariant: Callable[[VectorField], InvariantReport], stride: int = 1
) -> InvariantSeries:
    """Evaluate ``invariant`` on every ``stride``-th snapshot (the last one always included)."""
    if stride < 1:
        raise ValueError("stride must be >= 1")
    count = len(trajectory.snapshots)
    idx = list(range(0, count, stride))
    if count and idx[-1] != count - 1:
        idx.append(count - 1)
    times, values, reports = [], [], []
    for i in idx:
        t = trajectory.times[i]
        try:
            rep = invariant(trajectory.field(i))
        except Exception as exc:
            raise InvariantTrackingError(t, exc) from exc
        times.append(t)
        values.append(rep.raw)
        reports.append(rep)
    return InvariantSeries(np.asarray(times), np.asarray(values), reports)
