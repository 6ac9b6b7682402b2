import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from sllg.spectral import TorusGrid, VectorField, random_band_limited

settings.register_profile(
    "sllg",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("stress", parent=settings.get_profile("sllg"), max_examples=300)
settings.load_profile(os.environ.get("SLLG_HYPOTHESIS_PROFILE", "sllg"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def band_field(grid: TorusGrid, rng, r2: float = 4.0, decay: float = 0.0) -> VectorField:
    return VectorField(grid, random_band_limited(grid, rng, r2, decay=decay))


def unit_band_field(grid: TorusGrid, rng, r2: float = 2.0, amplitude: float = 0.4) -> VectorField:
    p = random_band_limited(grid, rng, r2)
    p *= amplitude / np.max(np.sqrt(np.sum(p**2, axis=0)))
    p[2] += 1.0
    return VectorField(grid, p / np.sqrt(np.sum(p**2, axis=0)))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(lines):
        terminalreporter.write_line(lines[key])
