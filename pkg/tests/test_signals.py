"""GBN generation, superposition, calibrated disturbances."""

import numpy as np
import pytest

from tsid import (
    ArgumentError,
    CalibrationError,
    DisturbanceConfig,
    GbnConfig,
    band_power_fraction,
    generate_disturbance,
    generate_gbn,
    superpose,
)


class TestGbn:
    def test_levels(self):
        u = generate_gbn(500, GbnConfig(0.1, amplitude=2.5), seed=0)
        assert set(np.unique(np.abs(u))) == {2.5}

    def test_deterministic(self):
        a = generate_gbn(200, GbnConfig(0.3), seed=42)
        b = generate_gbn(200, GbnConfig(0.3), seed=42)
        assert np.array_equal(a, b)

    def test_switch_rate_binomial(self):
        # switches are Bernoulli(p) per step; check within 3 sigma
        p = 0.06
        n = 100_000
        u = generate_gbn(n, GbnConfig(p), seed=1)
        switches = int(np.sum(u[1:] != u[:-1]))
        sigma = np.sqrt((n - 1) * p * (1 - p))
        assert abs(switches - (n - 1) * p) < 3 * sigma

    def test_mean_dwell_time(self):
        # geometric dwell: mean dwell = 1/p samples, i.e. Ts/p seconds
        p = 0.02
        n = 1_000_000
        u = generate_gbn(n, GbnConfig(p), seed=3)
        runs = 1 + int(np.sum(u[1:] != u[:-1]))
        mean_dwell = n / runs
        assert mean_dwell == pytest.approx(1 / p, rel=0.02)

    def test_table_switch_interval(self):
        # p=0.06 at Ts=0.04 s gives a 0.667 s mean switch interval
        cfg = GbnConfig(0.06)
        assert cfg.mean_switch_time(0.04) == pytest.approx(0.04 / 0.06)
        assert cfg.mean_switch_time(0.04) == pytest.approx(0.667, abs=0.001)

    def test_invalid_probability(self):
        with pytest.raises(ArgumentError):
            GbnConfig(0.0)
        with pytest.raises(ArgumentError):
            GbnConfig(1.0)

    def test_empty_rejected(self):
        with pytest.raises(ArgumentError):
            generate_gbn(0, GbnConfig(0.1), seed=0)


class TestSuperpose:
    def test_zero_identity(self):
        x = generate_gbn(100, GbnConfig(0.2), seed=0)
        assert np.array_equal(superpose(x, np.zeros(100)), x)

    def test_commutative(self):
        a = generate_gbn(100, GbnConfig(0.2), seed=0)
        b = generate_gbn(100, GbnConfig(0.01), seed=1)
        assert np.array_equal(superpose(a, b), superpose(b, a))

    def test_three_level_sum(self):
        a = generate_gbn(5000, GbnConfig(0.2, amplitude=1.0), seed=0)
        b = generate_gbn(5000, GbnConfig(0.01, amplitude=1.0), seed=1)
        s = superpose(a, b)
        assert set(np.unique(s)).issubset({-2.0, 0.0, 2.0})

    def test_length_mismatch(self):
        with pytest.raises(ArgumentError):
            superpose(np.ones(5), np.ones(6))

    def test_band_coverage(self):
        # dual-band test signal keeps more than 10% of its power in each band
        ts = 0.04
        fast = generate_gbn(20_000, GbnConfig(0.06), seed=2)
        slow = generate_gbn(20_000, GbnConfig(6e-4), seed=3)
        u = superpose(fast, slow)
        cutoff = 0.38  # near the geometric mean of the band edges
        low = band_power_fraction(u, ts, (0.0, cutoff))
        high = band_power_fraction(u, ts, (cutoff, np.pi / ts))
        assert low > 0.10
        assert high > 0.10


class TestDisturbance:
    def test_zero_target(self):
        ref = np.sin(np.arange(100))
        v = generate_disturbance(ref, DisturbanceConfig(0.0), seed=0)
        assert np.array_equal(v, np.zeros(100))

    def test_exact_calibration(self):
        ref = np.sin(0.1 * np.arange(5000))
        v = generate_disturbance(ref, DisturbanceConfig(0.15), seed=4)
        ratio = np.var(v) / np.var(ref)
        assert ratio == pytest.approx(0.15, rel=1e-10)

    def test_default_shaping_filter(self):
        cfg = DisturbanceConfig()
        assert cfg.shaping_num == (1.0, -0.62)
        assert cfg.shaping_den == (1.0, -0.92)

    def test_white_disturbance_uncorrelated(self):
        n = 50_000
        ref = np.sin(0.01 * np.arange(n))
        cfg = DisturbanceConfig(0.1, shaping_num=(1.0,), shaping_den=(1.0,))
        v = generate_disturbance(ref, cfg, seed=5)
        v0 = v - v.mean()
        rho1 = float(np.sum(v0[1:] * v0[:-1]) / np.sum(v0 * v0))
        assert abs(rho1) < 3 / np.sqrt(n)

    def test_shaped_disturbance_correlated(self):
        # the default first-order shaping produces visibly colored noise
        n = 50_000
        ref = np.sin(0.01 * np.arange(n))
        v = generate_disturbance(ref, DisturbanceConfig(0.1), seed=5)
        v0 = v - v.mean()
        rho1 = float(np.sum(v0[1:] * v0[:-1]) / np.sum(v0 * v0))
        assert rho1 > 0.1

    def test_zero_variance_reference(self):
        with pytest.raises(CalibrationError):
            generate_disturbance(np.ones(100), DisturbanceConfig(0.15), seed=0)

    def test_reproducible(self):
        ref = np.sin(0.1 * np.arange(1000))
        a = generate_disturbance(ref, DisturbanceConfig(0.15), seed=9)
        b = generate_disturbance(ref, DisturbanceConfig(0.15), seed=9)
        assert np.array_equal(a, b)


class TestBandPower:
    def test_fractions_sum_to_one(self):
        u = generate_gbn(4096, GbnConfig(0.1), seed=0)
        ts = 0.1
        split = 1.0
        low = band_power_fraction(u, ts, (0.0, split))
        high = band_power_fraction(u, ts, (split, np.pi / ts))
        assert low + high == pytest.approx(1.0, abs=1e-6)

    def test_pure_tone_localized(self):
        ts = 0.1
        t = np.arange(8192) * ts
        u = np.sin(5.0 * t)
        assert band_power_fraction(u, ts, (4.0, 6.0)) > 0.99

    def test_invalid_band(self):
        with pytest.raises(ArgumentError):
            band_power_fraction(np.ones(10), 0.1, (2.0, 1.0))
