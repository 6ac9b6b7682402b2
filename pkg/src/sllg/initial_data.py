"""Unit-length initial magnetizations, including topologically nontrivial ones."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .spectral import TWO_PI, TorusGrid, VectorField, random_band_limited

KINDS = (
    "constant",
    "single-harmonic",
    "perturbed-constant",
    "skyrmion-2d",
    "twisted-skyrmion-string-3d",
)


def smooth_step(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 1 for ``t <= 0``, 0 for ``t >= 1``, all derivatives flat at both ends."""
    t = np.asarray(t, dtype=float)

    def bump(s):
        out = np.zeros_like(s)
        pos = s > 0
        out[pos] = np.exp(-1.0 / s[pos])
        return out

    a = bump(1.0 - t)
    b = bump(t)
    return a / (a + b)


def profile_angle(r: np.ndarray, R: float) -> np.ndarray:
    """Polar angle of the soliton profile: ``pi`` at the core, 0 for ``r >= R``."""
    return np.pi * smooth_step(r / R)


def periodic_offset(grid: TorusGrid, center: Sequence[float]) -> list:
    """Minimum-image displacement ``x - center`` on the unit torus, per axis."""
    xs = grid.coords()
    c = np.asarray(center, dtype=float)
    if c.shape != (grid.dim,):
        raise ValueError(f"center must have {grid.dim} coordinates")
    return [((x - cj + 0.5) % 1.0) - 0.5 for x, cj in zip(xs, c)]


def _sphere_field(grid: TorusGrid, theta: np.ndarray, phase: np.ndarray) -> VectorField:
    s = np.sin(theta)
    return VectorField(grid, np.stack([s * np.cos(phase), s * np.sin(phase), np.cos(theta)]))


def make_constant(grid: TorusGrid, direction=(0.0, 0.0, 1.0)) -> VectorField:
    d = np.asarray(direction, dtype=float)
    norm = np.linalg.norm(d)
    if norm == 0.0:
        raise ValueError("direction must be nonzero")
    return VectorField.constant(grid, d / norm)


def make_single_harmonic(grid: TorusGrid, k=(1, 0, 0), axes=(0, 1)) -> VectorField:
    """``cos(2 pi k.x) e_a + sin(2 pi k.x) e_b`` for the axis pair ``(a, b)``."""
    k = np.asarray(k, dtype=float)[: grid.dim]
    if not np.any(k):
        raise ValueError("wavevector must be nonzero")
    a, b = axes
    if a == b or not {a, b} <= {0, 1, 2}:
        raise ValueError("axes must be two distinct component indices")
    phase = TWO_PI * sum(kj * x for kj, x in zip(k, grid.coords()))
    values = np.zeros((3,) + grid.shape)
    values[a] = np.cos(phase)
    values[b] = np.sin(phase)
    return VectorField(grid, values)


def make_perturbed_constant(
    grid: TorusGrid,
    seed: int = 0,
    amplitude: float = 0.2,
    band: float = 2,
    direction=(0.0, 0.0, 1.0),
) -> VectorField:
    """Constant direction plus a random band-limited bump, normalized pointwise.

    The perturbation has modes with ``|k|^2 <= band`` and is scaled to sup-norm
    ``amplitude`` before normalization.
    """
    if not 0.0 <= amplitude < 0.5:
        raise ValueError("amplitude must lie in [0, 0.5)")
    base = make_constant(grid, direction).values
    if amplitude == 0.0:
        return VectorField(grid, base)
    rng = np.random.default_rng(seed)
    pert = random_band_limited(grid, rng, band, components=3, decay=0.0)
    pert *= amplitude / np.max(np.sqrt(np.sum(pert**2, axis=0)))
    m = base + pert
    return VectorField(grid, m / np.sqrt(np.sum(m**2, axis=0)))


def make_skyrmion_2d(
    grid: TorusGrid, center=(0.5, 0.5), R: float = 0.3, sign: int = 1
) -> VectorField:
    """Compactly supported skyrmion of degree ``sign`` (+1 or -1).

    The core points along ``-e3``, the field is exactly ``e3`` for ``r >= R``.
    """
    if grid.dim != 2:
        raise ValueError("skyrmion-2d needs a two-dimensional grid")
    if not 0.0 < R < 0.5:
        raise ValueError("R must lie in (0, 1/2)")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    dx, dy = periodic_offset(grid, center)
    r = np.hypot(dx, dy)
    # with m = (sin t cos f, sin t sin f, cos t) and t decreasing outward, f = -phi has degree +1
    phase = -sign * np.arctan2(dy, dx)
    return _sphere_field(grid, profile_angle(r, R), phase)


def make_twisted_skyrmion_string_3d(
    grid: TorusGrid,
    center=(0.5, 0.5, 0.5),
    R: float = 0.18,
    q: int = 1,
    ring_radius: Optional[float] = 0.25,
    sign: int = 1,
    geometry: str = "ring",
) -> VectorField:
    """Skyrmion tube whose cross-section phase turns ``q`` times along the string.

    ``geometry='ring'`` (default) closes the string into a torus of radius
    ``ring_radius`` around the third axis; the field is ``e3`` outside the tube,
    so all fluxes vanish and the Hopf invariant is ``q * sign``.

    ``geometry='straight'`` runs the string along the third axis with phase
    ``phi + 2 pi q x3``. It is periodic, but every cross-section carries degree
    ``sign``, i.e. net flux through the (x1, x2) torus, so its Hopf invariant is
    not an integer homotopy invariant.
    """
    if grid.dim != 3:
        raise ValueError("twisted string needs a three-dimensional grid")
    if not 0.0 < R < 0.5:
        raise ValueError("R must lie in (0, 1/2)")
    if int(q) != q:
        raise ValueError("twist count q must be an integer")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    dx, dy, dz = periodic_offset(grid, center)
    if geometry == "straight":
        r = np.hypot(dx, dy)
        phase = -sign * np.arctan2(dy, dx) + TWO_PI * q * grid.coords()[2]
        return _sphere_field(grid, profile_angle(r, R), phase)
    if geometry != "ring":
        raise ValueError(f"unknown geometry {geometry!r}")
    if not (R < ring_radius and ring_radius + R < 0.5):
        raise ValueError("ring needs R < ring_radius and ring_radius + R < 1/2")
    rho = np.hypot(dx, dy)
    u = rho - ring_radius
    s = np.hypot(u, dz)
    phase = sign * np.arctan2(dz, u) + q * np.arctan2(dy, dx)
    return _sphere_field(grid, profile_angle(s, R), phase)


@dataclass
class AnsatzSpec:
    """Declarative description of an initial field, expressible in run configs."""

    kind: str = "constant"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown ansatz kind {self.kind!r}; choose from {KINDS}")

    def build(self, grid: TorusGrid) -> VectorField:
        p = dict(self.params)
        if self.kind == "constant":
            return make_constant(grid, p.get("direction", (0.0, 0.0, 1.0)))
        if self.kind == "single-harmonic":
            return make_single_harmonic(grid, p.get("k", (1, 0, 0)), p.get("axes", (0, 1)))
        if self.kind == "perturbed-constant":
            return make_perturbed_constant(
                grid,
                seed=int(p.get("seed", 0)),
                amplitude=float(p.get("amplitude", 0.2)),
                band=float(p.get("band", 2)),
                direction=p.get("direction", (0.0, 0.0, 1.0)),
            )
        if self.kind == "skyrmion-2d":
            return make_skyrmion_2d(
                grid,
                center=p.get("center", (0.5, 0.5)),
                R=float(p.get("R", 0.3)),
                sign=int(p.get("sign", 1)),
            )
        return make_twisted_skyrmion_string_3d(
            grid,
            center=p.get("center", (0.5, 0.5, 0.5)),
            R=float(p.get("R", 0.18)),
            q=int(p.get("q", 1)),
            ring_radius=float(p.get("ring_radius", 0.25)),
            sign=int(p.get("sign", 1)),
            geometry=str(p.get("geometry", "ring")),
        )
