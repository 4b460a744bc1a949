"""Text-file formats: key-value configs, model files, and fit reports.

Three formats, all line-oriented UTF-8 text:

* Config files: ``key = value`` lines; ``#`` starts a comment (full line or
  trailing); blank lines are ignored. Typed loaders turn them into system,
  signal, filtering-subtraction, or experiment configurations, reporting
  malformed input with 1-based line numbers.
* Model files: the same key-value syntax carrying a fitted transfer function
  (domain, sampling time, coefficient lists, optional noise model) plus
  free-form string metadata. Numeric text is full double precision ``repr``,
  so a save/load round trip is exact.
* Fit reports: a flat key-value block (method, orders, loss, FOE, RE) with
  an optional residual CSV alongside, and an FOE order-scan table as CSV.

Dataset CSV I/O lives on :class:`~tsid.dataset.TimeSeriesDataset` itself.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, InputFormatError
from .estimation import FitReport, OrderScanResult
from .experiments import ExperimentConfig
from .filsub import FilSubConfig
from .lti import RationalTransferFunction, rtf

_REQUIRED = object()


def read_key_values(path) -> dict:
    """Parse a ``key = value`` file.

    Returns:
        Mapping key -> (value text, line number). Keys are unique; values
        are stripped of surrounding whitespace and trailing comments.

    Raises:
        InputFormatError: on a line without ``=``, an empty key or value,
            or a duplicate key.
    """
    out: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InputFormatError("expected 'key = value'", lineno)
            key, value = (part.strip() for part in line.split("=", 1))
            if not key:
                raise InputFormatError("empty key", lineno)
            if not value:
                raise InputFormatError(f"key {key!r} has an empty value", lineno)
            if key in out:
                raise InputFormatError(f"duplicate key {key!r}", lineno)
            out[key] = (value, lineno)
    return out


class _Fields:
    """Typed, line-number-aware access to a parsed key-value mapping."""

    def __init__(self, kv: dict):
        self.kv = kv
        self.seen: set = set()

    def take(self, key: str, kind: str, default=_REQUIRED):
        if key not in self.kv:
            if default is _REQUIRED:
                raise InputFormatError(f"missing required key {key!r}")
            return default
        self.seen.add(key)
        value, lineno = self.kv[key]
        try:
            return _CONVERTERS[kind](value)
        except ValueError:
            raise InputFormatError(f"key {key!r}: expected {kind}, got {value!r}", lineno)

    def finish(self) -> None:
        for key, (_, lineno) in self.kv.items():
            if key not in self.seen:
                raise InputFormatError(f"unknown key {key!r}", lineno)


def _parse_bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(text)


def _parse_floats(text: str) -> tuple:
    parts = text.replace(",", " ").split()
    if not parts:
        raise ValueError(text)
    return tuple(float(p) for p in parts)


_CONVERTERS = {
    "int": int,
    "float": float,
    "str": str,
    "bool": _parse_bool,
    "floats": _parse_floats,
}


# =====================================================================
# Config loaders
# =====================================================================


def load_system(path) -> RationalTransferFunction:
    """Read a transfer function from a config file.

    Keys: ``numerator`` and ``denominator`` (coefficient lists, ascending
    powers of s when continuous, powers of z^-1 when discrete), optional
    ``sampling_time`` (omit or set to ``continuous`` for continuous time).
    """
    kv = read_key_values(path)
    fields = _Fields(kv)
    num = fields.take("numerator", "floats")
    den = fields.take("denominator", "floats")
    ts_text = fields.take("sampling_time", "str", None)
    fields.finish()
    if ts_text is None or ts_text.lower() == "continuous":
        ts = None
    else:
        try:
            ts = float(ts_text)
        except ValueError:
            raise InputFormatError(
                f"key 'sampling_time': expected float or 'continuous', got {ts_text!r}",
                kv["sampling_time"][1],
            )
    return rtf(num, den, ts)


@dataclass(frozen=True)
class SignalConfig:
    """Test-signal recipe for the ``gbn`` and ``simulate`` entry points.

    One GBN band is mandatory (given as ``switch_time`` in seconds or as
    ``switch_probability`` directly); ``slow_switch_time`` adds a second,
    superposed band at the same amplitude. ``noise_to_signal`` adds a
    disturbance to simulated outputs (ignored by plain signal generation),
    shaped by the standard first-order filter or left white.
    """

    n_samples: int
    sampling_time: float
    amplitude: float = 1.0
    seed: int = 0
    switch_time: float | None = None
    switch_probability: float | None = None
    slow_switch_time: float | None = None
    noise_to_signal: float = 0.0
    noise_shaping: str = "standard"

    def __post_init__(self):
        if self.n_samples < 1:
            raise ArgumentError(f"n_samples must be >= 1, got {self.n_samples}")
        if not self.sampling_time > 0:
            raise ArgumentError(f"sampling_time must be positive, got {self.sampling_time}")
        if (self.switch_time is None) == (self.switch_probability is None):
            raise ArgumentError("exactly one of switch_time / switch_probability is required")
        if self.noise_to_signal < 0:
            raise ArgumentError(f"noise_to_signal must be >= 0, got {self.noise_to_signal}")
        if self.noise_shaping not in ("standard", "white"):
            raise ArgumentError(
                f"noise_shaping must be 'standard' or 'white', got {self.noise_shaping!r}"
            )

    @property
    def effective_switch_probability(self) -> float:
        if self.switch_probability is not None:
            return self.switch_probability
        return self.sampling_time / self.switch_time

    @property
    def slow_switch_probability(self) -> float | None:
        if self.slow_switch_time is None:
            return None
        return self.sampling_time / self.slow_switch_time


def load_signal_config(path) -> SignalConfig:
    """Read a :class:`SignalConfig` from a key-value file."""
    fields = _Fields(read_key_values(path))
    config = SignalConfig(
        n_samples=fields.take("n_samples", "int"),
        sampling_time=fields.take("sampling_time", "float"),
        amplitude=fields.take("amplitude", "float", 1.0),
        seed=fields.take("seed", "int", 0),
        switch_time=fields.take("switch_time", "float", None),
        switch_probability=fields.take("switch_probability", "float", None),
        slow_switch_time=fields.take("slow_switch_time", "float", None),
        noise_to_signal=fields.take("noise_to_signal", "float", 0.0),
        noise_shaping=fields.take("noise_shaping", "str", "standard"),
    )
    fields.finish()
    return config


def load_filsub_config(path) -> FilSubConfig:
    """Read a :class:`~tsid.filsub.FilSubConfig` from a key-value file."""
    fields = _Fields(read_key_values(path))
    config = FilSubConfig(
        fast_cutoff=fields.take("fast_cutoff", "float"),
        slow_cutoff=fields.take("slow_cutoff", "float"),
        order=fields.take("order", "int", 2),
        fast_order=fields.take("fast_order", "int", None),
        slow_order=fields.take("slow_order", "int", None),
        estimator=fields.take("estimator", "str", "oe"),
        noise_order=fields.take("noise_order", "int", 1),
        filter_cutoff=fields.take("filter_cutoff", "float", None),
        filter_order=fields.take("filter_order", "int", 4),
        decimate=fields.take("decimate", "bool", True),
        scale_ratio_min=fields.take("scale_ratio_min", "float", 30.0),
        band_power_min=fields.take("band_power_min", "float", 0.10),
    )
    fields.finish()
    return config


def load_experiment_config(path) -> ExperimentConfig:
    """Read an :class:`~tsid.experiments.ExperimentConfig` from a key-value file."""
    fields = _Fields(read_key_values(path))
    config = ExperimentConfig(
        scenario=fields.take("scenario", "str"),
        seeds=fields.take("seeds", "int", 20),
        noise_to_signal=fields.take("noise_to_signal", "float", None),
        duration=fields.take("duration", "float", None),
        amplitude=fields.take("amplitude", "float", 1.0),
        step_horizon=fields.take("step_horizon", "float", 200.0),
        solver_iterations=fields.take("solver_iterations", "int", None),
        solver_tolerance=fields.take("solver_tolerance", "float", None),
        filter_order=fields.take("filter_order", "int", 4),
        decimate=fields.take("decimate", "bool", True),
    )
    fields.finish()
    return config


# =====================================================================
# Model files
# =====================================================================


@dataclass(frozen=True, eq=False)
class LoadedModel:
    """A model file's contents: process model, optional noise model, metadata."""

    process: RationalTransferFunction
    noise: RationalTransferFunction | None
    metadata: dict


def _coeff_text(values) -> str:
    return " ".join(repr(float(v)) for v in values)


def save_model(
    path,
    process: RationalTransferFunction,
    noise: RationalTransferFunction | None = None,
    metadata: dict | None = None,
) -> None:
    """Write a model file.

    Args:
        path: destination.
        process: the process transfer function.
        noise: optional noise model; must share the process model's domain.
        metadata: extra string-valued keys (e.g. method, order). Keys must
            not collide with the format's own.
    """
    reserved = {"domain", "sampling_time", "numerator", "denominator",
                "noise_numerator", "noise_denominator"}
    metadata = dict(metadata or {})
    for key in metadata:
        if key in reserved:
            raise ArgumentError(f"metadata key {key!r} collides with a format key")
    if noise is not None and noise.sampling_time != process.sampling_time:
        raise ArgumentError("noise model domain differs from the process model")
    lines = []
    if process.is_discrete:
        lines.append("domain = discrete")
        lines.append(f"sampling_time = {process.sampling_time!r}")
    else:
        lines.append("domain = continuous")
    lines.append(f"numerator = {_coeff_text(process.num.coeffs)}")
    lines.append(f"denominator = {_coeff_text(process.den.coeffs)}")
    if noise is not None:
        lines.append(f"noise_numerator = {_coeff_text(noise.num.coeffs)}")
        lines.append(f"noise_denominator = {_coeff_text(noise.den.coeffs)}")
    for key in sorted(metadata):
        lines.append(f"{key} = {metadata[key]}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path) -> LoadedModel:
    """Read a model file written by :func:`save_model`.

    Raises:
        InputFormatError: on malformed syntax, an unknown domain, a missing
            sampling time for a discrete model, or a half-specified noise
            model.
    """
    kv = read_key_values(path)
    fields = _Fields(kv)
    domain = fields.take("domain", "str")
    if domain not in ("discrete", "continuous"):
        raise InputFormatError(f"unknown domain {domain!r}", kv["domain"][1])
    ts = fields.take("sampling_time", "float", None)
    if domain == "discrete" and ts is None:
        raise InputFormatError("discrete model file lacks a sampling_time key")
    if domain == "continuous" and ts is not None:
        raise InputFormatError("continuous model file carries a sampling_time key",
                               kv["sampling_time"][1])
    num = fields.take("numerator", "floats")
    den = fields.take("denominator", "floats")
    noise_num = fields.take("noise_numerator", "floats", None)
    noise_den = fields.take("noise_denominator", "floats", None)
    if (noise_num is None) != (noise_den is None):
        raise InputFormatError("noise model needs both numerator and denominator")
    metadata = {key: value for key, (value, _) in kv.items() if key not in fields.seen}
    process = rtf(num, den, ts)
    noise = rtf(noise_num, noise_den, ts) if noise_num is not None else None
    return LoadedModel(process=process, noise=noise, metadata=metadata)


# =====================================================================
# Fit reports and order-scan tables
# =====================================================================


def save_fit_report(path, report: FitReport, residual_path=None) -> None:
    """Write a fit report as key-value text, optionally with a residual CSV.

    The residual CSV has a ``sample,residual`` header; sample indices start
    at the report's first evaluated sample.
    """
    pairs = report.to_key_values()
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in pairs.items():
            fh.write(f"{key} = {value}\n")
    if residual_path is not None:
        if report.residuals is None:
            raise ArgumentError("report carries no residuals to write")
        residuals = np.asarray(report.residuals, dtype=float)
        with open(residual_path, "w", encoding="utf-8") as fh:
            fh.write("sample,residual\n")
            for k, value in enumerate(residuals):
                fh.write(f"{k},{value!r}\n")


def save_order_scan(path, result: OrderScanResult) -> None:
    """Write an FOE order-scan table as CSV, one row per candidate order."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("order,foe,loss,n_parameters,converged\n")
        for row in result.rows:
            fh.write(
                f"{row.order},{row.foe!r},{row.loss!r},{row.n_parameters},"
                f"{'true' if row.converged else 'false'}\n"
            )
