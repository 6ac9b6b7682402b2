"""Seeded, refinable Brownian driving paths.

Gaussian draws come from a Philox counter-based generator whose key is derived
from ``(seed, level, noise index)``; the position inside the stream is the step
index. Level 0 holds the coarse increments, each further level inserts
Brownian-bridge midpoints, so a refined path contains the coarse path exactly
and every run at any resolution is a pure function of the seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_SEED_MASK = (1 << 64) - 1


def _normals(seed: int, level: int, noise: int, count: int) -> np.ndarray:
    ss = np.random.SeedSequence(seed & _SEED_MASK, spawn_key=(level, noise))
    return np.random.Generator(np.random.Philox(ss)).standard_normal(count)


@dataclass(frozen=True)
class BrownianPath:
    """Sampled values ``B^k(t_i)`` of ``n_noises`` independent Brownian motions.

    ``values`` has shape ``(n_noises, steps + 1)`` with ``values[:, 0] == 0``.
    """

    seed: int
    T: float
    base_steps: int
    level: int
    values: np.ndarray

    @property
    def steps(self) -> int:
        return self.values.shape[1] - 1

    @property
    def n_noises(self) -> int:
        return self.values.shape[0]

    @property
    def dt(self) -> float:
        return self.T / self.steps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.steps + 1)

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.values, axis=1)


def sample_brownian(seed: int, T: float, steps: int, n_noises: int = 1) -> BrownianPath:
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if not T > 0:
        raise ValueError("T must be positive")
    if n_noises < 0:
        raise ValueError("n_noises must be nonnegative")
    dt = T / steps
    values = np.zeros((n_noises, steps + 1))
    for k in range(n_noises):
        values[k, 1:] = np.cumsum(np.sqrt(dt) * _normals(seed, 0, k, steps))
    return BrownianPath(seed, float(T), steps, 0, values)


def refine_brownian(path: BrownianPath, times: int = 1) -> BrownianPath:
    """Halve the step ``times`` times by Brownian-bridge midpoint insertion.

    The midpoint of ``[t, t + dt]`` is ``(B(t) + B(t + dt))/2 + sqrt(dt)/2 Z``;
    the coarse values are carried over bitwise.
    """
    for _ in range(times):
        coarse = path.values
        steps = path.steps
        level = path.level + 1
        fine = np.empty((path.n_noises, 2 * steps + 1))
        fine[:, ::2] = coarse
        half_sd = 0.5 * np.sqrt(path.dt)
        for k in range(path.n_noises):
            z = _normals(path.seed, level, k, steps)
            fine[k, 1::2] = 0.5 * (coarse[k, :-1] + coarse[k, 1:]) + half_sd * z
        path = BrownianPath(path.seed, path.T, path.base_steps, level, fine)
    return path
