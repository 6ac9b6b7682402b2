"""Fourier pseudospectral machinery on the unit torus.

Fields are sampled on a uniform grid with ``n`` points per axis on the unit
torus ``[0, 1)^dim``. Spectral coefficients are normalized so that the
coefficient of ``exp(2 pi i k.x)`` is the mean of ``f(x) exp(-2 pi i k.x)``; a
constant field therefore has its value as the ``k = 0`` coefficient and
Parseval reads ``int |f|^2 dx = sum_k |f_k|^2``.

Integer wavevectors use the symmetric representative set
``{-n/2 + 1, ..., n/2}`` on every axis. Even-order multipliers (Laplacian,
bi-Laplacian, Sobolev weights) see the Nyquist mode with ``k = n/2``. First
derivatives zero the Nyquist mode, since ``i k c`` with ``c`` real has no
real-valued representative on the grid.

Array-level helpers live on :class:`TorusGrid` and accept any number of
leading (component) axes; the free functions wrap them for
:class:`VectorField`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Union

import numpy as np
import scipy.fft as sp_fft

from .errors import GridMismatchError

TWO_PI = 2.0 * np.pi
FOUR_PI_SQ = 4.0 * np.pi**2


@dataclass(frozen=True)
class TorusGrid:
    """Uniform grid on the unit torus of dimension ``dim`` with ``n`` points per axis."""

    dim: int
    n: int

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        if self.n < 4 or self.n % 2:
            raise ValueError(f"points per axis must be even and >= 4, got {self.n}")

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.dim

    @property
    def npoints(self) -> int:
        return self.n**self.dim

    @property
    def spacing(self) -> float:
        return 1.0 / self.n

    @property
    def axes(self) -> tuple:
        return tuple(range(-self.dim, 0))

    def coords(self) -> tuple:
        """Meshgrid of sample coordinates, one array per axis (``indexing='ij'``)."""
        x = np.arange(self.n) / self.n
        return tuple(np.meshgrid(*([x] * self.dim), indexing="ij"))

    # -- wavevectors -----------------------------------------------------

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Signed integer wavenumbers of one axis, full FFT ordering."""
        k = np.fft.fftfreq(self.n, d=1.0 / self.n)
        k[self.n // 2] = self.n // 2
        return k

    @cached_property
    def _k_axes(self) -> tuple:
        """Broadcastable integer wavenumbers in the real-FFT layout."""
        out = []
        for j in range(self.dim):
            if j == self.dim - 1:
                kj = np.arange(self.n // 2 + 1, dtype=float)
            else:
                kj = self.wavenumbers
            shape = [1] * self.dim
            shape[j] = kj.size
            out.append(kj.reshape(shape))
        return tuple(out)

    @cached_property
    def _k_axes_odd(self) -> tuple:
        """Like ``_k_axes`` with the Nyquist entry zeroed (first-derivative use)."""
        out = []
        for kj in self._k_axes:
            kj = kj.copy()
            kj[kj == self.n // 2] = 0.0
            out.append(kj)
        return tuple(out)

    @cached_property
    def ksq(self) -> np.ndarray:
        """``|k|^2`` in the real-FFT layout."""
        total = 0.0
        for kj in self._k_axes:
            total = total + kj**2
        return np.asarray(total, dtype=float)

    @cached_property
    def ksq_full(self) -> np.ndarray:
        """``|k|^2`` in the full-FFT layout."""
        ks = np.meshgrid(*([self.wavenumbers] * self.dim), indexing="ij")
        return sum(kj**2 for kj in ks)

    @cached_property
    def rfft_weights(self) -> np.ndarray:
        """Multiplicity of each real-FFT coefficient in a Parseval sum."""
        w = np.full(self.n // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        shape = [1] * (self.dim - 1) + [w.size]
        return np.broadcast_to(w.reshape(shape), self.ksq.shape)

    @property
    def max_radius_squared(self) -> int:
        return self.dim * (self.n // 2) ** 2

    # -- transforms ------------------------------------------------------

    def fft(self, a: np.ndarray) -> np.ndarray:
        return sp_fft.rfftn(a, axes=self.axes, norm="forward")

    def ifft(self, ahat: np.ndarray) -> np.ndarray:
        return sp_fft.irfftn(ahat, s=self.shape, axes=self.axes, norm="forward")

    # -- linear operators on arrays -------------------------------------

    def laplacian(self, a: np.ndarray) -> np.ndarray:
        return self.ifft(-FOUR_PI_SQ * self.ksq * self.fft(a))

    def bilaplacian(self, a: np.ndarray) -> np.ndarray:
        return self.ifft(FOUR_PI_SQ**2 * self.ksq**2 * self.fft(a))

    def derivative(self, a: np.ndarray, j: int) -> np.ndarray:
        """Spectral ``d/dx_j`` along spatial axis ``j`` (0-based)."""
        return self.ifft(1j * TWO_PI * self._k_axes_odd[j] * self.fft(a))

    def gradient(self, a: np.ndarray) -> list:
        ahat = self.fft(a)
        return [self.ifft(1j * TWO_PI * kj * ahat) for kj in self._k_axes_odd]

    def second_derivative(self, a: np.ndarray, j: int, k: int) -> np.ndarray:
        if j == k:
            mult = -FOUR_PI_SQ * self._k_axes[j] ** 2
        else:
            mult = -FOUR_PI_SQ * self._k_axes_odd[j] * self._k_axes_odd[k]
        return self.ifft(mult * self.fft(a))

    def cutoff_mask(self, radius_squared: Optional[float]) -> np.ndarray:
        if radius_squared is None:
            return np.ones(self.ksq.shape, dtype=bool)
        return self.ksq <= radius_squared + 1e-9

    def project(self, a: np.ndarray, radius_squared: Optional[float]) -> np.ndarray:
        if radius_squared is None:
            return np.array(a, dtype=float, copy=True)
        return self.ifft(self.fft(a) * self.cutoff_mask(radius_squared))

    # -- reductions ------------------------------------------------------

    def integrate(self, a: np.ndarray) -> float:
        """Grid quadrature of ``int a dx`` over the unit torus."""
        return float(np.mean(a, axis=self.axes).sum())

    def inner(self, a: np.ndarray, b: np.ndarray) -> float:
        """L2 pairing, summed over all leading components."""
        return float(np.mean(a * b, axis=self.axes).sum())

    def l2_norm(self, a: np.ndarray) -> float:
        return float(np.sqrt(self.inner(a, a)))

    def spectral_sum(self, ahat: np.ndarray, weight=1.0) -> float:
        """``sum_k weight(k) |a_k|^2`` from real-FFT coefficients."""
        return float(np.sum(self.rfft_weights * weight * np.abs(ahat) ** 2))

    def sobolev_norm(self, a: np.ndarray, s: float) -> float:
        return float(np.sqrt(self.spectral_sum(self.fft(a), (1.0 + FOUR_PI_SQ * self.ksq) ** s)))

    def sobolev_seminorm(self, a: np.ndarray, s: int) -> float:
        return float(np.sqrt(self.spectral_sum(self.fft(a), (FOUR_PI_SQ * self.ksq) ** s)))

    # -- resolution changes ----------------------------------------------

    def resample(self, a: np.ndarray, n_new: int) -> np.ndarray:
        """Trigonometric interpolation of ``a`` onto a grid with ``n_new`` points per axis.

        Refinement zero-embeds the spectrum and splits the Nyquist coefficient
        between ``+n/2`` and ``-n/2``; coarsening truncates and folds the new
        Nyquist pair back together.
        """
        if n_new == self.n:
            return np.array(a, copy=True)
        c = sp_fft.fftn(a, axes=self.axes, norm="forward")
        for ax in self.axes:
            c = _resize_axis(c, ax, self.n, n_new)
        return np.real(sp_fft.ifftn(c, axes=self.axes, norm="forward"))


def _resize_axis(c: np.ndarray, axis: int, n_old: int, n_new: int) -> np.ndarray:
    shape = list(c.shape)
    shape[axis] = n_new
    out = np.zeros(shape, dtype=complex)
    src = np.moveaxis(c, axis, 0)
    dst = np.moveaxis(out, axis, 0)
    h_old, h_new = n_old // 2, n_new // 2
    if n_new > n_old:
        dst[:h_old] = src[:h_old]
        dst[n_new - h_old + 1 :] = src[h_old + 1 :]
        dst[h_old] = 0.5 * src[h_old]
        dst[n_new - h_old] = 0.5 * src[h_old]
    else:
        dst[:h_new] = src[:h_new]
        dst[h_new + 1 :] = src[n_old - h_new + 1 :]
        dst[h_new] = src[h_new] + src[n_old - h_new]
    return out


@dataclass(frozen=True)
class SpectralCutoff:
    """Galerkin truncation keeping every mode with ``|k|^2 <= radius_squared``."""

    radius_squared: int

    def __post_init__(self):
        if self.radius_squared < 0:
            raise ValueError("radius_squared must be nonnegative")

    def mask(self, grid: TorusGrid) -> np.ndarray:
        return grid.cutoff_mask(self.radius_squared)

    def mode_count(self, grid: TorusGrid) -> int:
        return int(np.count_nonzero(grid.ksq_full <= self.radius_squared))


@dataclass
class VectorField:
    """R^3-valued samples on a torus grid, stored as ``values[component, x1, ..., xd]``."""

    grid: TorusGrid
    values: np.ndarray
    _spectral: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        expected = (3,) + self.grid.shape
        if self.values.shape != expected:
            raise ValueError(f"values must have shape {expected}, got {self.values.shape}")

    @classmethod
    def constant(cls, grid: TorusGrid, vector) -> "VectorField":
        v = np.asarray(vector, dtype=float).reshape((3,) + (1,) * grid.dim)
        return cls(grid, np.broadcast_to(v, (3,) + grid.shape).copy())

    @classmethod
    def zeros(cls, grid: TorusGrid) -> "VectorField":
        return cls(grid, np.zeros((3,) + grid.shape))

    def copy(self) -> "VectorField":
        return VectorField(self.grid, self.values.copy())

    def magnitude(self) -> np.ndarray:
        return np.sqrt(np.sum(self.values**2, axis=0))

    def __add__(self, other: "VectorField") -> "VectorField":
        _same_grid(self, other)
        return VectorField(self.grid, self.values + other.values)

    def __sub__(self, other: "VectorField") -> "VectorField":
        _same_grid(self, other)
        return VectorField(self.grid, self.values - other.values)

    def __mul__(self, scalar: float) -> "VectorField":
        return VectorField(self.grid, self.values * scalar)

    __rmul__ = __mul__


ScalarOrVector = Union[VectorField, np.ndarray]


def _same_grid(a: VectorField, b: VectorField) -> None:
    if a.grid != b.grid:
        raise GridMismatchError(f"grid mismatch: {a.grid} vs {b.grid}")


def to_spectral(f: VectorField) -> np.ndarray:
    """Full complex Fourier coefficients, shape ``(3, n, ..., n)``, forward-normalized."""
    if f._spectral is None:
        f._spectral = sp_fft.fftn(f.values, axes=f.grid.axes, norm="forward")
    return f._spectral


def to_real(coeffs: np.ndarray, grid: TorusGrid) -> VectorField:
    values = sp_fft.ifftn(coeffs, axes=grid.axes, norm="forward")
    return VectorField(grid, np.real(values))


def laplacian(f: VectorField) -> VectorField:
    return VectorField(f.grid, f.grid.laplacian(f.values))


def bilaplacian(f: VectorField) -> VectorField:
    return VectorField(f.grid, f.grid.bilaplacian(f.values))


def partial(f: VectorField, j: int) -> VectorField:
    return VectorField(f.grid, f.grid.derivative(f.values, j))


def galerkin_project(f: VectorField, cutoff: Optional[SpectralCutoff]) -> VectorField:
    """L2-orthogonal projection onto the span of modes inside ``cutoff``."""
    r2 = None if cutoff is None else cutoff.radius_squared
    return VectorField(f.grid, f.grid.project(f.values, r2))


def cross(a: VectorField, b: VectorField) -> VectorField:
    _same_grid(a, b)
    return VectorField(a.grid, cross_arrays(a.values, b.values))


def dot(a: VectorField, b: VectorField) -> np.ndarray:
    _same_grid(a, b)
    return np.sum(a.values * b.values, axis=0)


def cross_arrays(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pointwise cross product over the leading component axis."""
    a1, a2, a3 = a[0], a[1], a[2]
    b1, b2, b3 = b[0], b[1], b[2]
    return np.stack(
        np.broadcast_arrays(a2 * b3 - a3 * b2, a3 * b1 - a1 * b3, a1 * b2 - a2 * b1)
    )


def inner(a: VectorField, b: VectorField) -> float:
    _same_grid(a, b)
    return a.grid.inner(a.values, b.values)


def l2_norm(f: VectorField) -> float:
    return f.grid.l2_norm(f.values)


def sobolev_norm(f: VectorField, s: float, convention: str = "multiplier") -> float:
    """H^s norm of ``f``.

    ``convention='multiplier'`` (canonical) weights mode ``k`` by
    ``(1 + 4 pi^2 |k|^2)^s``. ``convention='derivatives'`` is only defined for
    integer ``s`` and returns ``(|f|^2 + |grad f|^2 + ... + |grad^s f|^2)^(1/2)``
    with full derivative tensors. The two are equivalent but not equal for
    ``s >= 2``.
    """
    if s < 0:
        raise ValueError("s must be nonnegative")
    if convention == "multiplier":
        return f.grid.sobolev_norm(f.values, s)
    if convention == "derivatives":
        if int(s) != s:
            raise ValueError("derivative-sum convention needs integer s")
        fhat = f.grid.fft(f.values)
        weight = sum((FOUR_PI_SQ * f.grid.ksq) ** j for j in range(int(s) + 1))
        return float(np.sqrt(f.grid.spectral_sum(fhat, weight)))
    raise ValueError(f"unknown convention {convention!r}")


def sobolev_seminorm(f: VectorField, s: int) -> float:
    """Homogeneous ``|D^s f|_{L2}`` for integer ``s``."""
    return f.grid.sobolev_seminorm(f.values, s)


def linf_norm(f: ScalarOrVector) -> float:
    """Grid-sampled sup norm; Euclidean magnitude for vector fields."""
    if isinstance(f, VectorField):
        return float(np.max(f.magnitude()))
    return float(np.max(np.abs(f)))


def resample(f: VectorField, n_new: int) -> VectorField:
    return VectorField(TorusGrid(f.grid.dim, n_new), f.grid.resample(f.values, n_new))


def random_band_limited(
    grid: TorusGrid,
    rng: np.random.Generator,
    radius_squared: float,
    components: Optional[int] = 3,
    decay: float = 0.0,
) -> np.ndarray:
    """Random real trigonometric polynomial with modes ``|k|^2 <= radius_squared``.

    Coefficients are complex Gaussians damped by ``(1 + |k|^2)^(-decay/2)``.
    ``components=None`` returns a scalar field.
    """
    lead = () if components is None else (components,)
    shape = lead + grid.ksq.shape
    coeffs = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    coeffs *= grid.cutoff_mask(radius_squared) * (1.0 + grid.ksq) ** (-decay / 2)
    # round trip through real space to enforce Hermitian symmetry on the edge planes
    return grid.ifft(coeffs)
