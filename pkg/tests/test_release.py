import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from wolbachia_control.release import (BumpRelease, ConstantRelease,
                                       LinearRelease, PiecewiseRelease,
                                       ScheduleError, evaluate,
                                       normalize_same_peak,
                                       normalize_same_total,
                                       parse_schedule_spec, total_release)


def four_schemes(horizon=365.0):
    return [ConstantRelease(1000.0),
            LinearRelease(1000.0, horizon=horizon),
            BumpRelease(1000.0, peak_day=50.0),
            BumpRelease(1000.0, peak_day=100.0)]


class TestEvaluate:
    def test_constant(self):
        assert evaluate(ConstantRelease(250.0), 17.3) == 250.0

    def test_linear_zero_at_horizon(self):
        s = LinearRelease(1000.0, horizon=365.0)
        assert evaluate(s, 365.0) == 0.0

    def test_linear_starts_at_twice_magnitude(self):
        s = LinearRelease(1000.0, horizon=365.0)
        assert_allclose(evaluate(s, 0.0), 2000.0, rtol=1e-15)

    def test_linear_clamped_beyond_horizon(self):
        s = LinearRelease(1000.0, horizon=100.0)
        assert evaluate(s, 150.0) == 0.0

    def test_bump_peak_value(self):
        s = BumpRelease(1000.0, peak_day=50.0)
        assert evaluate(s, 50.0) == 1000.0

    def test_bump_sech_profile(self):
        s = BumpRelease(1000.0, peak_day=50.0)
        assert_allclose(evaluate(s, 150.0), 1000.0 / math.cosh(1.0), rtol=1e-15)

    def test_negative_time_rejected(self):
        with pytest.raises(ScheduleError):
            evaluate(ConstantRelease(1.0), -0.5)

    def test_piecewise_beyond_horizon_rejected(self):
        s = PiecewiseRelease((1.0, 2.0), horizon=10.0)
        with pytest.raises(ScheduleError):
            evaluate(s, 11.0)


class TestPiecewiseIndexing:
    def test_right_closed_pieces(self):
        s = PiecewiseRelease((10.0, 20.0), horizon=10.0)
        assert s.piece_length == 5
        assert evaluate(s, 0.0) == 10.0
        assert evaluate(s, 5.0) == 10.0   # boundary belongs to the left piece
        assert evaluate(s, 5.5) == 20.0
        assert evaluate(s, 10.0) == 20.0

    @pytest.mark.parametrize("horizon,n", [(360, 12), (365, 12), (100, 10), (10, 2)])
    def test_breakpoint_mapping_property(self, horizon, n):
        values = tuple(float(i + 1) for i in range(n))
        s = PiecewiseRelease(values, horizon=float(horizon))
        ell = s.piece_length
        for i in range(1, n):
            if ell * i >= horizon:
                break
            for eps in (0.25, 0.5, 0.99):
                assert evaluate(s, ell * i + eps) == values[i]

    def test_monthly_policy_days(self):
        s = PiecewiseRelease(tuple(range(1, 13)), horizon=365.0)
        assert s.piece_length == 31
        assert s.piece_days() == (31,) * 11 + (24,)
        assert sum(s.piece_days()) == 365
        assert s.breakpoints(365) == tuple(float(31 * i) for i in range(1, 12))

    def test_discontinuities_only_at_breakpoints(self):
        s = PiecewiseRelease((5.0, 7.0, 7.0, 1.0), horizon=20.0)
        points = s.breakpoints(20)
        assert points == (5.0, 10.0, 15.0)
        for t in np.linspace(0.01, 19.99, 211):
            if any(abs(t - b) < 0.05 for b in points):
                continue
            assert evaluate(s, t + 0.004) == evaluate(s, t - 0.004)

    def test_validation(self):
        with pytest.raises(ScheduleError):
            PiecewiseRelease((), horizon=10.0)
        with pytest.raises(ScheduleError):
            PiecewiseRelease((1.0, -2.0), horizon=10.0)


class TestTotalRelease:
    def test_constant(self):
        assert total_release(ConstantRelease(100.0), 10) == 1000.0

    def test_piecewise_two_pieces(self):
        s = PiecewiseRelease((100.0, 0.0), horizon=10.0)
        assert total_release(s, 10) == 500.0

    def test_linear_closed_form(self):
        # sum_{t=1..365} 2m(1 - t/365) = 2m*365 - 2m*(365*366/2)/365 = 364 m.
        m = 1000.0
        s = LinearRelease(m, horizon=365.0)
        assert_allclose(total_release(s, 365), 364.0 * m, rtol=1e-12)

    def test_day_zero_excluded(self):
        s = LinearRelease(1000.0, horizon=10.0)
        total = total_release(s, 10)
        by_hand = sum(2 * 1000.0 * (1 - t / 10.0) for t in range(1, 11))
        assert_allclose(total, by_hand, rtol=1e-15)

    @given(st.floats(min_value=1e-3, max_value=1e6))
    @settings(max_examples=50, deadline=None)
    def test_homogeneous_in_magnitude(self, k):
        base = BumpRelease(1.0, peak_day=40.0)
        assert_allclose(total_release(base.scaled(k), 100),
                        k * total_release(base, 100), rtol=1e-9)


class TestNormalizeSamePeak:
    def test_constant_rescaled(self):
        out = normalize_same_peak([ConstantRelease(500.0)], 1000.0)
        assert out[0].rate == 1000.0

    def test_bump_rescaled(self):
        out = normalize_same_peak([BumpRelease(2000.0, peak_day=50.0)], 1000.0)
        assert out[0].magnitude == 1000.0

    def test_linear_max_is_twice_magnitude(self):
        out = normalize_same_peak([LinearRelease(123.0, horizon=365.0)], 1000.0)
        assert_allclose(out[0].magnitude, 500.0, rtol=1e-15)

    def test_all_peaks_equal_after_normalization(self):
        out = normalize_same_peak(four_schemes(), 7777.0, horizon=365)
        maxima = [s.max_rate(365) for s in out]
        assert_allclose(maxima, 7777.0, rtol=1e-12)

    def test_zero_magnitude_rejected(self):
        with pytest.raises(ScheduleError):
            normalize_same_peak([ConstantRelease(0.0)], 1000.0)
        with pytest.raises(ScheduleError):
            normalize_same_peak([ConstantRelease(1.0)], -5.0)


class TestNormalizeSameTotal:
    def test_constant_year_total(self):
        out = normalize_same_total([ConstantRelease(1.0)], 365_000.0, horizon=365)
        assert_allclose(out[0].rate, 1000.0, rtol=1e-12)

    def test_bump_total_matches_numeric_sum(self):
        # The bump magnitude solving sum_t m*sech(0.01(t-50)) = total.
        total = 365_000.0
        sech_sum = sum(1.0 / math.cosh(0.01 * (t - 50.0)) for t in range(1, 366))
        out = normalize_same_total([BumpRelease(1.0, peak_day=50.0)], total,
                                   horizon=365)
        assert_allclose(out[0].magnitude, total / sech_sum, rtol=1e-12)

    def test_all_totals_equal_after_normalization(self):
        out = normalize_same_total(four_schemes(), 1.23e6, horizon=365)
        totals = [total_release(s, 365) for s in out]
        assert_allclose(totals, 1.23e6, rtol=1e-12)

    def test_zero_total_rejected(self):
        with pytest.raises(ScheduleError):
            normalize_same_total([ConstantRelease(0.0)], 100.0)


class TestKernelPacking:
    def test_packed_encoding_matches_python_evaluation(self):
        from wolbachia_control import kernels

        schedules = [ConstantRelease(123.0),
                     LinearRelease(1000.0, horizon=365.0),
                     BumpRelease(1000.0, peak_day=50.0),
                     PiecewiseRelease((5.0, 7.0, 1.0, 9.0), horizon=365.0)]
        for s in schedules:
            kind, a, b, values = s.pack()
            for t in np.linspace(0.0, 365.0, 247):
                assert kernels.release_rate(kind, a, b, values, float(t)) == \
                    s.value(float(t)), (s, t)


class TestParseScheduleSpec:
    def test_round_trips(self):
        assert parse_schedule_spec("constant:100") == ConstantRelease(100.0)
        assert parse_schedule_spec("zero") == ConstantRelease(0.0)
        assert parse_schedule_spec("linear:500", horizon=100) == LinearRelease(500.0, horizon=100.0)
        assert parse_schedule_spec("bump:1000,50") == BumpRelease(1000.0, peak_day=50.0)
        assert parse_schedule_spec("piecewise:1,2,3", horizon=9) == \
            PiecewiseRelease((1.0, 2.0, 3.0), horizon=9.0)

    @pytest.mark.parametrize("bad", ["", "constant", "constant:a", "bump:1",
                                     "wedge:1", "piecewise:"])
    def test_malformed_specs_rejected(self, bad):
        with pytest.raises(ScheduleError):
            parse_schedule_spec(bad)
