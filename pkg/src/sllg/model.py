"""Terms of the second-order regularized stochastic LLG equation.

The regularized exchange energy is

    E(m) = 1/2 int eps^2 |D^2 m|^2 + |grad m|^2 dx,

and its first variation is ``G(m) = eps^2 Lap^2 m - Lap m``. The effective
field is ``H_eff = -G``, so the Gilbert form ``-m x H - lam m x (m x H)`` becomes

    dm = (lam m x (m x G) + m x G) dt + sum_k (m x h_k) o dB^k

in the Stratonovich sense. Its Ito form carries the extra drift
``1/2 sum_k (m x h_k) x h_k``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import PreconditionError
from .spectral import (
    FOUR_PI_SQ,
    TorusGrid,
    VectorField,
    _same_grid,
    cross_arrays,
)

UNIT_TOLERANCE = 1e-6


@dataclass(frozen=True)
class ModelParams:
    """Damping ``lam``, regularization ``eps`` and the noise fields ``h_k``.

    Each noise field is either a :class:`VectorField` or a constant 3-vector.
    An empty tuple switches the noise off.
    """

    lam: float = 1.0
    eps: float = 0.1
    noise_fields: tuple = field(default=((0.0, 0.0, 1.0),))

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        object.__setattr__(self, "noise_fields", tuple(self.noise_fields))
        for h in self.noise_fields:
            vals = h.values if isinstance(h, VectorField) else np.asarray(h, dtype=float)
            if not isinstance(h, VectorField) and vals.shape != (3,):
                raise ValueError("constant noise fields must be 3-vectors")
            if not np.all(np.isfinite(vals)):
                raise ValueError("noise fields must be finite")

    @property
    def n_noises(self) -> int:
        return len(self.noise_fields)

    def without_noise(self) -> "ModelParams":
        return ModelParams(self.lam, self.eps, ())

    def noise_arrays(self, grid: TorusGrid) -> list:
        """Noise fields as arrays broadcastable against ``(3, *grid.shape)``."""
        out = []
        for h in self.noise_fields:
            if isinstance(h, VectorField):
                if h.grid != grid:
                    raise PreconditionError("noise field lives on a different grid")
                out.append(h.values)
            else:
                out.append(np.asarray(h, dtype=float).reshape((3,) + (1,) * grid.dim))
        return out


@dataclass
class EffectiveTorque:
    G: VectorField
    precession: VectorField
    damping: VectorField


def gradient_multiplier(grid: TorusGrid, eps: float) -> np.ndarray:
    """Fourier symbol of ``eps^2 Lap^2 - Lap`` in the real-FFT layout."""
    k2 = FOUR_PI_SQ * grid.ksq
    return eps**2 * k2**2 + k2


def variational_gradient_array(m: np.ndarray, grid: TorusGrid, eps: float) -> np.ndarray:
    return grid.ifft(gradient_multiplier(grid, eps) * grid.fft(m))


def variational_gradient(m: VectorField, p: ModelParams) -> VectorField:
    return VectorField(m.grid, variational_gradient_array(m.values, m.grid, p.eps))


def effective_torque(m: VectorField, p: ModelParams) -> EffectiveTorque:
    G = variational_gradient(m, p)
    prec = cross_arrays(m.values, G.values)
    damp = cross_arrays(m.values, prec)
    return EffectiveTorque(G, VectorField(m.grid, prec), VectorField(m.grid, damp))


def drift_array(m: np.ndarray, G: np.ndarray, lam: float) -> np.ndarray:
    prec = cross_arrays(m, G)
    return lam * cross_arrays(m, prec) + prec


def drift(m: VectorField, p: ModelParams) -> VectorField:
    """``lam m x (m x G) + m x G``, pointwise in real space."""
    G = variational_gradient_array(m.values, m.grid, p.eps)
    return VectorField(m.grid, drift_array(m.values, G, p.lam))


def noise_operator(m: VectorField, h: VectorField) -> VectorField:
    _same_grid(m, h)
    return VectorField(m.grid, cross_arrays(m.values, h.values))


def ito_correction_array(m: np.ndarray, hs: Sequence[np.ndarray]) -> np.ndarray:
    out = np.zeros_like(m)
    for h in hs:
        out += cross_arrays(cross_arrays(m, h), h)
    return 0.5 * out


def ito_correction(m: VectorField, p: ModelParams) -> VectorField:
    """``1/2 sum_k (m x h_k) x h_k``."""
    return VectorField(m.grid, ito_correction_array(m.values, p.noise_arrays(m.grid)))


def energy(m: VectorField, p: ModelParams) -> float:
    """Regularized exchange energy, evaluated as a spectral sum."""
    grid = m.grid
    k2 = FOUR_PI_SQ * grid.ksq
    return 0.5 * grid.spectral_sum(grid.fft(m.values), p.eps**2 * k2**2 + k2)


def dirichlet_energy(m: VectorField) -> float:
    grid = m.grid
    return 0.5 * grid.spectral_sum(grid.fft(m.values), FOUR_PI_SQ * grid.ksq)


# -- weak pairings -----------------------------------------------------------


def _double_product_bilaplacian(grid: TorusGrid, m: np.ndarray, w: np.ndarray) -> float:
    """Integration-by-parts form of <m x Lap^2 m, w> for H^2 fields."""
    lap_m = grid.laplacian(m)
    lap_w = grid.laplacian(w)
    total = grid.inner(cross_arrays(lap_w, m), lap_m)
    for dw, dm in zip(grid.gradient(w), grid.gradient(m)):
        total += 2.0 * grid.inner(cross_arrays(dw, dm), lap_m)
    return total


def weak_pairing_precession(m: VectorField, v: VectorField, p: ModelParams) -> float:
    """<m x (eps^2 Lap^2 m - Lap m), v> through two integrations by parts.

    Only second derivatives of ``m`` and ``v`` appear, so the pairing is
    defined for H^2 fields.
    """
    _same_grid(m, v)
    grid = m.grid
    bilap_part = _double_product_bilaplacian(grid, m.values, v.values)
    lap_part = grid.inner(cross_arrays(m.values, grid.laplacian(m.values)), v.values)
    return p.eps**2 * bilap_part - lap_part


def weak_pairing_damping(m: VectorField, v: VectorField, p: ModelParams) -> float:
    """<m x m x (eps^2 Lap^2 m - Lap m), v>, with the bi-Laplacian part moved onto v x m."""
    _same_grid(m, v)
    grid = m.grid
    bilap_part = damping_bilaplacian_pairing(m, v)
    mxlap = cross_arrays(m.values, grid.laplacian(m.values))
    lap_part = grid.inner(cross_arrays(m.values, mxlap), v.values)
    return p.eps**2 * bilap_part - lap_part


def damping_bilaplacian_pairing(m: VectorField, v: VectorField) -> float:
    """The weak form of <m x m x Lap^2 m, v> alone."""
    _same_grid(m, v)
    grid = m.grid
    vxm = cross_arrays(v.values, m.values)
    lap_m = grid.laplacian(m.values)
    total = grid.inner(cross_arrays(grid.laplacian(vxm), m.values), lap_m)
    for dvxm, dm in zip(grid.gradient(vxm), grid.gradient(m.values)):
        total += 2.0 * grid.inner(cross_arrays(dvxm, dm), lap_m)
    return total


def precession_pairing_direct(m: VectorField, v: VectorField, p: ModelParams) -> float:
    """<m x G(m), v> with G evaluated spectrally; valid for smooth fields."""
    _same_grid(m, v)
    G = variational_gradient_array(m.values, m.grid, p.eps)
    return m.grid.inner(cross_arrays(m.values, G), v.values)


def damping_pairing_direct(m: VectorField, v: VectorField, p: ModelParams) -> float:
    _same_grid(m, v)
    G = variational_gradient_array(m.values, m.grid, p.eps)
    return m.grid.inner(cross_arrays(m.values, cross_arrays(m.values, G)), v.values)


def damping_identity_rhs(m: VectorField, v: VectorField, tol: float = UNIT_TOLERANCE) -> float:
    """Right-hand side of the alternative form of <m x m x Lap^2 m, v> for unit fields.

    Evaluates ``-<Lap v, Lap m> + <|Lap m|^2 m, v> - 2 <(d_j m, d_k m), d_jk (v, m)>``,
    which agrees with :func:`damping_bilaplacian_pairing` when ``|m| = 1`` and
    ``(m . grad) m = 0``.
    """
    _same_grid(m, v)
    deviation = float(np.max(np.abs(m.magnitude() - 1.0)))
    if deviation > tol:
        raise PreconditionError(f"|m| deviates from 1 by {deviation:.3g} > {tol:.3g}")
    grid = m.grid
    mv, vv = m.values, v.values
    lap_m = grid.laplacian(mv)
    total = -grid.inner(grid.laplacian(vv), lap_m)
    total += grid.inner(np.sum(lap_m**2, axis=0) * mv, vv)
    dm = grid.gradient(mv)
    vm = np.sum(vv * mv, axis=0)
    for j in range(grid.dim):
        for k in range(grid.dim):
            gram = np.sum(dm[j] * dm[k], axis=0)
            total -= 2.0 * grid.inner(gram, grid.second_derivative(vm, j, k))
    return total
