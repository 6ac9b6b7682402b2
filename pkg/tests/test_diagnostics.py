import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sllg.brownian import sample_brownian
from sllg.diagnostics import (
    RECORD_FIELDS,
    ConvergenceWarning,
    agmon_ratio,
    compute_record,
    convergence_order,
    grad_l4_ratio,
    holder_exponent_estimate,
    l2_difference_series,
    product_ratio,
    tangency_residual,
    unit_deviation,
)
from sllg.errors import InsufficientDataError, PreconditionError
from sllg.initial_data import make_constant, make_single_harmonic, make_skyrmion_2d
from sllg.integrator import SchemeConfig, Trajectory
from sllg.model import ModelParams
from sllg.spectral import TorusGrid, VectorField, random_band_limited


def trajectory(grid, snapshots, times):
    return Trajectory(grid, ModelParams(), SchemeConfig(), None, times=list(times), snapshots=list(snapshots))


class TestPointwise:
    def test_unit_deviation(self):
        g = TorusGrid(2, 8)
        assert unit_deviation(make_constant(g)) == 0.0
        assert unit_deviation(VectorField.constant(g, (0, 0, 2))) == 1.0
        assert unit_deviation(make_skyrmion_2d(TorusGrid(2, 64))) < 1e-12

    def test_tangency_of_unit_fields(self):
        assert tangency_residual(make_constant(TorusGrid(3, 8))) == 0.0
        assert tangency_residual(make_single_harmonic(TorusGrid(3, 16), (1, 1, 0))) < 1e-12

    def test_tangency_closed_form(self):
        # m = (1 + cos 2 pi x) e3: (m, d1 m) = -2 pi sin (1 + cos), whose squared mean is
        # 4 pi^2 (1/2 + 1/8) by averaging sin^2 + 2 sin^2 cos + sin^2 cos^2
        g = TorusGrid(2, 16)
        (x, _) = g.coords()
        vals = np.zeros((3,) + g.shape)
        vals[2] = 1 + np.cos(2 * np.pi * x)
        expected = 2 * np.pi * math.sqrt(0.625)
        assert tangency_residual(VectorField(g, vals)) == pytest.approx(expected, rel=1e-12)

    def test_record_fields(self):
        g = TorusGrid(2, 16)
        m = make_single_harmonic(g, (1, 0, 0))
        rec = compute_record(m, ModelParams(), 0.25, charge=0.0)
        row = rec.as_row()
        assert tuple(row) == RECORD_FIELDS
        assert all(np.isfinite(v) for v in row.values())
        assert rec.l2_norm == pytest.approx(1.0, rel=1e-12)
        assert rec.h1_seminorm == pytest.approx(2 * np.pi, rel=1e-12)
        assert rec.h2_norm == pytest.approx(1 + 4 * np.pi**2, rel=1e-12)


class TestInterpolationRatios:
    def test_constant(self):
        u = np.ones((8, 8, 8))
        assert agmon_ratio(u) == pytest.approx(1.0)
        assert agmon_ratio(np.ones((8, 8))) == pytest.approx(1.0)
        assert grad_l4_ratio(u) == 0.0

    def test_single_harmonic_closed_forms(self):
        g = TorusGrid(3, 16)
        (x, _, _) = g.coords()
        u = np.cos(2 * np.pi * x)
        l2, h2 = math.sqrt(0.5), math.sqrt(0.5) * (1 + 4 * np.pi**2)
        assert agmon_ratio(u) == pytest.approx(1 / (l2**0.25 * h2**0.75), rel=1e-10)
        # |grad u|^4 = (2 pi)^4 sin^4, mean 3/8
        l4 = 2 * np.pi * (3 / 8) ** 0.25
        assert grad_l4_ratio(u) == pytest.approx(l4 / (l2**0.25 * h2**0.75), rel=1e-10)

    def test_two_dimensional_exponents(self):
        g = TorusGrid(2, 16)
        (x, _) = g.coords()
        u = np.cos(2 * np.pi * x)
        l2, h2 = math.sqrt(0.5), math.sqrt(0.5) * (1 + 4 * np.pi**2)
        assert agmon_ratio(u) == pytest.approx(1 / math.sqrt(l2 * h2), rel=1e-10)

    def test_zero_field(self):
        with pytest.raises(PreconditionError):
            agmon_ratio(np.zeros((8, 8)))
        with pytest.raises(PreconditionError):
            grad_l4_ratio(np.zeros((8, 8)))

    def test_dim_mismatch(self):
        with pytest.raises(ValueError):
            agmon_ratio(np.ones((8, 8)), dim=3)

    @given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3]))
    def test_ratios_bounded_on_random_fields(self, seed, dim):
        g = TorusGrid(dim, 16)
        u = random_band_limited(g, np.random.default_rng(seed), 16, components=None)
        assert 0 < agmon_ratio(u) <= 1.0
        assert 0 < grad_l4_ratio(u) < 1.0

    def test_product_ratio(self, rng):
        g = TorusGrid(2, 16)
        for _ in range(10):
            u, v = (random_band_limited(g, rng, 4, components=None) for _ in range(2))
            assert 0 < product_ratio(u, v) < 10.0
        assert product_ratio(np.ones((8, 8)), np.ones((8, 8))) == pytest.approx(0.5)


class TestHolder:
    def test_brownian_path(self):
        p = sample_brownian(2024, 1.0, 4096)
        est = holder_exponent_estimate(p.values[0][:, None], lags=[1, 2, 4, 8, 16, 32])
        assert 0.4 <= est <= 0.6

    def test_smooth_trajectory(self):
        t = np.linspace(0, 1, 257)
        g = TorusGrid(1, 8)
        (x,) = g.coords()
        snaps = [np.cos(2 * np.pi * (x - 0.3 * s)) for s in t]
        assert holder_exponent_estimate(snaps) >= 0.9

    def test_constant_trajectory_sentinel(self):
        assert math.isnan(holder_exponent_estimate([np.ones(4)] * 16))

    def test_insufficient_data(self):
        with pytest.raises(InsufficientDataError):
            holder_exponent_estimate([np.ones(4)] * 15)
        with pytest.raises(InsufficientDataError):
            holder_exponent_estimate([np.ones(4) * i for i in range(16)], lags=[1])

    def test_accepts_trajectory(self):
        g = TorusGrid(1, 4)
        snaps = [np.full((3, 4), float(i)) for i in range(16)]
        assert holder_exponent_estimate(trajectory(g, snaps, range(16))) == pytest.approx(1.0)


class TestDifferenceSeries:
    def test_identical(self):
        g = TorusGrid(2, 8)
        m = make_single_harmonic(g).values
        s = l2_difference_series(trajectory(g, [m, m], [0, 1]), trajectory(g, [m, m], [0, 1]))
        assert s.sup == 0.0

    def test_embeds_coarse_grid(self):
        coarse, fine = TorusGrid(2, 8), TorusGrid(2, 16)
        a = trajectory(coarse, [make_single_harmonic(coarse).values], [0.0])
        b = trajectory(fine, [make_single_harmonic(fine).values], [0.0])
        assert l2_difference_series(a, b).sup < 1e-14

    def test_running_max(self):
        g = TorusGrid(1, 4)
        zero = np.zeros((3, 4))
        a = trajectory(g, [zero] * 3, [0, 1, 2])
        b = trajectory(g, [zero + 1, zero + 3, zero + 2], [0, 1, 2])
        s = l2_difference_series(a, b)
        np.testing.assert_allclose(s.running_max, np.sqrt(3) * np.array([1, 3, 3]))

    def test_time_mismatch(self):
        g = TorusGrid(1, 4)
        zero = np.zeros((3, 4))
        with pytest.raises(PreconditionError):
            l2_difference_series(trajectory(g, [zero], [0.0]), trajectory(g, [zero], [0.1]))
        with pytest.raises(PreconditionError):
            l2_difference_series(trajectory(g, [zero], [0.0]), trajectory(TorusGrid(2, 4), [zero], [0.0]))


class TestConvergenceOrder:
    def test_examples(self):
        assert convergence_order([0.4, 0.1, 0.025]) == pytest.approx(2.0)
        assert convergence_order([0.2, 0.1, 0.05]) == pytest.approx(1.0)
        assert convergence_order([1e-3, 1e-4, 1e-5], [1.0, 0.1, 0.01]) == pytest.approx(1.0)

    def test_non_monotone_warns(self):
        with pytest.warns(ConvergenceWarning):
            slope = convergence_order([0.1, 0.2, 0.05])
        assert np.isfinite(slope)

    def test_monotone_is_silent(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            convergence_order([0.4, 0.2, 0.1])

    def test_bad_input(self):
        with pytest.raises(InsufficientDataError):
            convergence_order([0.2, 0.1])
        with pytest.raises(ValueError):
            convergence_order([0.2, 0.0, 0.1])
        with pytest.raises(ValueError):
            convergence_order([0.3, 0.2, 0.1], [1, 2])
