"""Test-signal and disturbance generation.

GBN (generalized binary noise) signals hold one of two levels ±amplitude and
flip sign with a fixed probability at every sample, giving a mean dwell time
of ``Ts / switching_probability`` seconds. Superposing a fast and a slow GBN
yields an input with power in two separated bands.

Output disturbances are filtered white noise, scaled so the realized variance
is an exact fraction of a reference signal's variance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from .errors import ArgumentError, CalibrationError


def as_rng(seed) -> np.random.Generator:
    """Coerce an int seed / seed sequence / Generator into a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class GbnConfig:
    """Binary test-signal parameters.

    Args:
        switching_probability: probability of a sign flip at each sample,
            in (0, 1). Mean dwell time is ``sampling_time / p``.
        amplitude: signal level; the signal takes values ±amplitude. A zero
            amplitude produces the zero signal (rejected later by excitation
            checks, not here).
    """

    switching_probability: float
    amplitude: float = 1.0

    def __post_init__(self):
        p = self.switching_probability
        if not 0.0 < p < 1.0:
            raise ArgumentError(f"switching_probability must be in (0, 1), got {p}")
        if self.amplitude < 0:
            raise ArgumentError(f"amplitude must be >= 0, got {self.amplitude}")

    def mean_switch_time(self, sampling_time: float) -> float:
        return sampling_time / self.switching_probability


def generate_gbn(n_samples: int, config: GbnConfig, seed) -> np.ndarray:
    """Generate a GBN realization.

    Args:
        n_samples: number of samples, >= 1.
        config: level and switching probability.
        seed: int seed, seed sequence, or ``numpy.random.Generator``.

    Returns:
        Array of ±amplitude values, deterministic for a fixed seed.
    """
    if n_samples < 1:
        raise ArgumentError(f"n_samples must be >= 1, got {n_samples}")
    rng = as_rng(seed)
    draws = rng.random(n_samples)
    first = 1.0 if draws[0] < 0.5 else -1.0
    steps = np.where(draws[1:] < config.switching_probability, -1.0, 1.0)
    signs = first * np.concatenate(([1.0], np.cumprod(steps)))
    return config.amplitude * signs


def superpose(*signals) -> np.ndarray:
    """Sum of equally long signals (e.g. a fast and a slow GBN)."""
    if not signals:
        raise ArgumentError("superpose needs at least one signal")
    arrays = [np.asarray(s, dtype=float) for s in signals]
    n = arrays[0].size
    for a in arrays:
        if a.ndim != 1 or a.size != n:
            raise ArgumentError("signals must be 1-D and equally long")
    return np.sum(arrays, axis=0)


@dataclass(frozen=True)
class DisturbanceConfig:
    """Colored output-noise parameters.

    The disturbance is ``alpha * (C(q)/D(q)) e(t)`` with ``e`` unit white
    noise; ``alpha`` is calibrated so that ``var(v) / var(reference)`` equals
    ``noise_to_signal`` exactly on the realized sequence. The default shaping
    filter is ``(1 - 0.62 q^-1) / (1 - 0.92 q^-1)``.
    """

    noise_to_signal: float = 0.15
    shaping_num: tuple = (1.0, -0.62)
    shaping_den: tuple = (1.0, -0.92)

    def __post_init__(self):
        if self.noise_to_signal < 0:
            raise ArgumentError(
                f"noise_to_signal must be >= 0, got {self.noise_to_signal}"
            )


def generate_disturbance(reference, config: DisturbanceConfig, seed) -> np.ndarray:
    """Filtered white noise with variance calibrated against ``reference``.

    Args:
        reference: the signal whose variance sets the scale (typically the
            noise-free output).
        config: shaping filter and target variance ratio.
        seed: int seed, seed sequence, or Generator.

    Returns:
        Disturbance v with ``var(v) = noise_to_signal * var(reference)``.

    Raises:
        CalibrationError: if the reference has zero variance and the target
            ratio is nonzero.
    """
    reference = np.asarray(reference, dtype=float)
    n = reference.size
    if config.noise_to_signal == 0.0:
        return np.zeros(n)
    ref_var = float(np.var(reference))
    if ref_var <= 0.0:
        raise CalibrationError("reference signal has zero variance; cannot calibrate noise")
    rng = as_rng(seed)
    e = rng.standard_normal(n)
    w = sps.lfilter(config.shaping_num, config.shaping_den, e)
    w_var = float(np.var(w))
    if w_var <= 0.0:
        raise CalibrationError("shaped noise has zero variance; check the shaping filter")
    alpha = np.sqrt(config.noise_to_signal * ref_var / w_var)
    return alpha * w


def band_power_fraction(u, sampling_time: float, band: tuple[float, float]) -> float:
    """Fraction of total signal power inside a frequency band.

    Args:
        u: signal samples.
        sampling_time: sampling interval in seconds.
        band: ``(w_lo, w_hi)`` angular frequencies in rad/s.

    Returns:
        Periodogram power in ``[w_lo, w_hi]`` divided by total power.
    """
    u = np.asarray(u, dtype=float)
    w_lo, w_hi = band
    if not 0 <= w_lo < w_hi:
        raise ArgumentError(f"band must satisfy 0 <= w_lo < w_hi, got {band}")
    # Passing fs in rad/s makes the returned frequency axis rad/s as well.
    freqs, pxx = sps.periodogram(u, fs=2.0 * np.pi / sampling_time)
    total = float(np.sum(pxx))
    if total <= 0.0:
        return 0.0
    mask = (freqs >= w_lo) & (freqs <= w_hi)
    return float(np.sum(pxx[mask]) / total)
