"""Digital Butterworth prefiltering for band isolation.

High-pass filtering isolates the fast band before the fast-model fit;
low-pass filtering isolates the slow band after subtraction. Filters are
causal single-pass IIR filters, so the first samples of a filtered record
carry a transient; ``apply_filter`` stamps that length into the dataset's
``burn_in`` field and estimators skip it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from .dataset import TimeSeriesDataset
from .errors import ArgumentError
from .lti import RationalTransferFunction, rtf

_KINDS = ("highpass", "lowpass")


@dataclass(frozen=True)
class FilterSpec:
    """Butterworth filter parameters.

    Args:
        kind: ``"highpass"`` or ``"lowpass"``.
        cutoff: -3 dB angular frequency in rad/s; must lie below the Nyquist
            frequency ``pi / sampling_time``.
        sampling_time: sampling interval of the data to be filtered.
        order: filter order (default 4).
    """

    kind: str
    cutoff: float
    sampling_time: float
    order: int = 4

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ArgumentError(f"kind must be one of {_KINDS}, got {self.kind!r}")
        if not self.cutoff > 0:
            raise ArgumentError(f"cutoff must be positive, got {self.cutoff}")
        if not self.sampling_time > 0:
            raise ArgumentError(f"sampling_time must be positive, got {self.sampling_time}")
        if self.order < 1:
            raise ArgumentError(f"order must be >= 1, got {self.order}")
        nyquist = math.pi / self.sampling_time
        if self.cutoff >= nyquist:
            raise ArgumentError(
                f"cutoff {self.cutoff:.6g} rad/s is at or above Nyquist {nyquist:.6g} rad/s"
            )


def design_filter(spec: FilterSpec) -> RationalTransferFunction:
    """Design the discrete Butterworth filter for ``spec``.

    Bilinear transform with prewarping, so the magnitude at the cutoff is
    exactly 1/sqrt(2). Returns a stable discrete-time transfer function.
    """
    wn = spec.cutoff * spec.sampling_time / math.pi  # normalized to Nyquist
    btype = "high" if spec.kind == "highpass" else "low"
    b, a = sps.butter(spec.order, wn, btype=btype)
    return rtf(b, a, spec.sampling_time)


def _design_sos(spec: FilterSpec) -> np.ndarray:
    # Expanded-polynomial coefficients lose the pole cluster to rounding when
    # order × octaves-below-Nyquist is large; cascaded biquads do not.
    wn = spec.cutoff * spec.sampling_time / math.pi
    btype = "high" if spec.kind == "highpass" else "low"
    return sps.butter(spec.order, wn, btype=btype, output="sos")


def transient_length(spec: FilterSpec) -> int:
    """Samples to discard after filtering: five filter time constants per order."""
    return math.ceil(5 * spec.order / (spec.cutoff * spec.sampling_time))


def filter_signal(spec: FilterSpec, x) -> np.ndarray:
    """Single-pass causal filtering of one signal (zero initial conditions)."""
    return sps.sosfilt(_design_sos(spec), np.asarray(x, dtype=float))


def apply_filter(spec: FilterSpec, data: TimeSeriesDataset) -> TimeSeriesDataset:
    """Filter every channel of a dataset and mark the transient.

    All input, output, and clean-output channels pass through the same
    filter, preserving input/output relationships for LTI systems. The
    returned dataset's ``burn_in`` is the maximum of the existing one and
    the filter transient length.

    Raises:
        ArgumentError: if the spec's sampling time differs from the data's.
    """
    if abs(spec.sampling_time - data.sampling_time) > 1e-12 * data.sampling_time:
        raise ArgumentError(
            f"filter sampling_time {spec.sampling_time} differs from "
            f"dataset's {data.sampling_time}"
        )
    sos = _design_sos(spec)

    def run(channel):
        return sps.sosfilt(sos, channel)

    return data.with_channels(
        inputs=[run(c) for c in data.inputs],
        outputs=[run(c) for c in data.outputs],
        clean_outputs=None
        if data.clean_outputs is None
        else [run(c) for c in data.clean_outputs],
        burn_in=max(data.burn_in, min(transient_length(spec), data.n_samples - 1)),
    )
