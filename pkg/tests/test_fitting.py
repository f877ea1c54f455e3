"""Tests for log-log exponent extraction and rate comparison.

Pure power laws in (1+t) must be recovered to round-off; the window logic is
checked against hand-computed sample indices.
"""

import numpy as np
import pytest

from nsdecay import fitting
from nsdecay.fitting import (FitResult, box_horizon, compare_rates, default_window,
                             first_stable_window, fit_exponent)


class TestBoxHorizon:
    def test_values(self):
        assert box_horizon(2 * np.pi, 0.25) == pytest.approx(4.0)
        assert box_horizon(2 * np.pi, 1.0) == pytest.approx(1.0)
        # mu above one does not stretch the horizon
        assert box_horizon(4 * np.pi, 2.0) == pytest.approx(4.0)
        assert box_horizon(8 * np.pi, 1.0) == pytest.approx(16.0)


class TestDefaultWindow:
    def test_drops_leading_transient(self):
        times = np.arange(101.0)  # ceil(0.2 * 100) = 20
        lo, hi = default_window(times)
        assert lo == 20.0 and hi == 100.0

    def test_t_box_caps_upper_edge(self):
        times = np.arange(101.0)
        lo, hi = default_window(times, t_box=50.0)
        assert lo == 20.0 and hi == 50.0

    def test_degenerate_window_rejected(self):
        with pytest.raises(ValueError):
            default_window(np.arange(101.0), t_box=10.0)
        with pytest.raises(ValueError):
            default_window(np.array([0.0, 1.0, 2.0]))


class TestFitExponent:
    def test_exact_power_law(self):
        times = np.geomspace(1.0, 1e4, 40)
        for p in (-0.75, -1.5, -2.5):
            values = 3.7 * (1.0 + times) ** p
            fit = fit_exponent(times, values)
            assert fit.exponent == pytest.approx(p, abs=1e-10)
            assert fit.stderr < 1e-10
            assert fit.n_points >= fitting.MIN_POINTS

    def test_explicit_window_selects_samples(self):
        times = np.arange(0.0, 50.0)
        values = (1.0 + times) ** -2.0
        fit = fit_exponent(times, values, window=(10.0, 30.0))
        assert fit.window == (10.0, 30.0)
        assert fit.n_points == 21
        assert fit.exponent == pytest.approx(-2.0, abs=1e-12)

    def test_subsampling_invariance(self):
        times = np.geomspace(1.0, 1e3, 60)
        values = (1.0 + times) ** -1.25
        full = fit_exponent(times, values, window=(5.0, 800.0))
        thin = fit_exponent(times[::3], values[::3], window=(5.0, 800.0))
        assert thin.exponent == pytest.approx(full.exponent, abs=1e-9)

    def test_box_saturated_flag(self):
        times = np.geomspace(1.0, 100.0, 20)
        values = (1.0 + times) ** -1.0
        fit = fit_exponent(times, values, window=(2.0, 100.0), t_box=50.0)
        assert fit.box_saturated
        fit = fit_exponent(times, values, t_box=50.0)
        assert not fit.box_saturated

    def test_validation(self):
        times = np.geomspace(1.0, 100.0, 20)
        values = (1.0 + times) ** -1.0
        with pytest.raises(ValueError):
            fit_exponent(times, values[:-1])
        with pytest.raises(ValueError):
            fit_exponent(times, values, window=(5.0, 5.0))
        with pytest.raises(ValueError):
            fit_exponent(times, values, window=(90.0, 100.0))  # 3 samples
        bad = values.copy()
        bad[10] = -1.0
        with pytest.raises(ValueError):
            fit_exponent(times, bad, window=(2.0, 100.0))

    def test_single_abscissa_rejected(self):
        times = np.full(6, 3.0)
        values = np.ones(6)
        with pytest.raises(ValueError):
            fit_exponent(times, values, window=(2.0, 4.0))


class TestCompareRates:
    def base(self, exponent):
        return FitResult(exponent=exponent, stderr=0.0, window=(1.0, 10.0), n_points=9)

    def test_two_sided(self):
        assert compare_rates(self.base(-1.52), -1.5, 0.05).verdict is True
        assert compare_rates(self.base(-1.58), -1.5, 0.05).verdict is False
        assert compare_rates(self.base(-1.42), -1.5, 0.05).verdict is False

    def test_one_sided_upper_bound(self):
        # faster decay than predicted passes
        assert compare_rates(self.base(-2.4), -1.5, 0.1, one_sided=True).verdict is True
        assert compare_rates(self.base(-1.55), -1.5, 0.1, one_sided=True).verdict is True
        assert compare_rates(self.base(-1.35), -1.5, 0.1, one_sided=True).verdict is False

    def test_preserves_fit_fields(self):
        out = compare_rates(self.base(-1.5), -1.5, 0.1)
        assert out.window == (1.0, 10.0)
        assert out.theoretical == -1.5
        with pytest.raises(ValueError):
            compare_rates(self.base(-1.5), -1.5, -0.1)


class TestFirstStableWindow:
    def test_clean_power_law_is_stable_immediately(self):
        times = np.geomspace(1.0, 1e4, 80)
        values = (1.0 + times) ** -1.5
        out = first_stable_window(times, values)
        assert out is not None
        assert out["exponent"] == pytest.approx(-1.5, abs=1e-8)

    def test_reported_exponent_matches_its_window(self):
        times = np.geomspace(0.1, 1e4, 120)
        values = (1.0 + times) ** -1.5 * (1.0 + 50.0 * np.exp(-times))
        out = first_stable_window(times, values)
        assert out is not None
        refit = fit_exponent(times, values, (out["window"][0], out["window"][1]))
        assert refit.exponent == pytest.approx(out["exponent"], rel=1e-12)

    def test_tight_tolerance_rejects_drifting_slope(self):
        times = np.geomspace(0.1, 1e4, 120)
        values = np.exp(-np.sqrt(1.0 + times))  # log-log slope drifts without limit
        assert first_stable_window(times, values, stability_tol=1e-4) is None

    def test_short_series_returns_none(self):
        times = np.arange(10.0)
        values = (1.0 + times) ** -1.0
        assert first_stable_window(times, values) is None


class TestFitResultValidation:
    def test_constraints(self):
        with pytest.raises(ValueError):
            FitResult(exponent=-1.0, stderr=0.0, window=(5.0, 1.0), n_points=10)
        with pytest.raises(ValueError):
            FitResult(exponent=-1.0, stderr=0.0, window=(1.0, 5.0), n_points=3)
        with pytest.raises(ValueError):
            FitResult(exponent=-1.0, stderr=-1.0, window=(1.0, 5.0), n_points=10)
