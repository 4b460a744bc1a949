"""Sampled input/output data with CSV persistence.

The on-disk format is a plain CSV with one metadata comment line::

    # Ts=0.04
    t,u1,y1,y1_clean
    0,1,0.0524,0.0524
    0.04,1,0.0917,0.0917

The first comment line carries the sampling time; a second optional comment
``# burn_in=<int>`` marks leading samples that downstream loss sums should
skip (set by the filtering stage). Column order is the time stamp, all input
channels ``u1..uM``, all output channels ``y1..yP``, and optionally the
noise-free outputs ``y1_clean..yP_clean`` when they are known (simulation).
Values are written with full double precision.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ArgumentError, InputFormatError


@dataclass(frozen=True, eq=False)
class TimeSeriesDataset:
    """Uniformly sampled multichannel data.

    Args:
        sampling_time: sampling interval in seconds, > 0.
        inputs: input channels, each a 1-D array of equal length.
        outputs: output channels (may be empty for signal-only data).
        clean_outputs: optional noise-free outputs, same count/length as
            ``outputs``; present only for simulated data.
        burn_in: number of leading samples carrying filter transients,
            excluded from estimation loss sums.
    """

    sampling_time: float
    inputs: tuple = ()
    outputs: tuple = ()
    clean_outputs: tuple | None = None
    burn_in: int = 0

    def __post_init__(self):
        if not self.sampling_time > 0:
            raise ArgumentError(f"sampling_time must be positive, got {self.sampling_time}")
        inputs = tuple(_as_channel(c) for c in self.inputs)
        outputs = tuple(_as_channel(c) for c in self.outputs)
        clean = self.clean_outputs
        if clean is not None:
            clean = tuple(_as_channel(c) for c in clean)
            if len(clean) != len(outputs):
                raise ArgumentError(
                    f"{len(clean)} clean outputs for {len(outputs)} outputs"
                )
        if not inputs and not outputs:
            raise ArgumentError("dataset needs at least one channel")
        lengths = {c.size for c in inputs + outputs + (clean or ())}
        if len(lengths) > 1:
            raise ArgumentError(f"channel lengths differ: {sorted(lengths)}")
        n = lengths.pop()
        if n == 0:
            raise ArgumentError("channels are empty")
        if not 0 <= self.burn_in < n:
            raise ArgumentError(f"burn_in {self.burn_in} outside [0, {n})")
        object.__setattr__(self, "sampling_time", float(self.sampling_time))
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "outputs", outputs)
        object.__setattr__(self, "clean_outputs", clean)
        object.__setattr__(self, "burn_in", int(self.burn_in))

    # -- queries ---------------------------------------------------------

    @property
    def n_samples(self) -> int:
        channels = self.inputs or self.outputs
        return channels[0].size

    @property
    def n_inputs(self) -> int:
        return len(self.inputs)

    @property
    def n_outputs(self) -> int:
        return len(self.outputs)

    @property
    def duration(self) -> float:
        return (self.n_samples - 1) * self.sampling_time

    def time(self) -> np.ndarray:
        return np.arange(self.n_samples) * self.sampling_time

    def with_channels(self, inputs=None, outputs=None, clean_outputs=None,
                      burn_in=None) -> "TimeSeriesDataset":
        """Copy with channels (and optionally burn_in) replaced."""
        return replace(
            self,
            inputs=self.inputs if inputs is None else tuple(inputs),
            outputs=self.outputs if outputs is None else tuple(outputs),
            clean_outputs=self.clean_outputs if clean_outputs is None else tuple(clean_outputs),
            burn_in=self.burn_in if burn_in is None else burn_in,
        )

    # -- CSV persistence ---------------------------------------------------

    def save(self, path) -> None:
        """Write the dataset as CSV (see module docstring for the format)."""
        header = ["t"]
        header += [f"u{i + 1}" for i in range(self.n_inputs)]
        header += [f"y{i + 1}" for i in range(self.n_outputs)]
        if self.clean_outputs is not None:
            header += [f"y{i + 1}_clean" for i in range(self.n_outputs)]
        columns = [self.time()]
        columns += list(self.inputs) + list(self.outputs) + list(self.clean_outputs or ())
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# Ts={self.sampling_time!r}\n")
            if self.burn_in:
                fh.write(f"# burn_in={self.burn_in}\n")
            fh.write(",".join(header) + "\n")
            for row in zip(*columns):
                fh.write(",".join(repr(float(v)) for v in row) + "\n")

    @classmethod
    def load(cls, path) -> "TimeSeriesDataset":
        """Read a dataset written by :meth:`save`.

        Raises:
            InputFormatError: on any malformed line, carrying its line number.
        """
        sampling_time = None
        burn_in = 0
        header = None
        rows: list[list[float]] = []
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    if header is not None:
                        raise InputFormatError("comment after the header", lineno)
                    body = line[1:].strip()
                    if body.startswith("Ts="):
                        try:
                            sampling_time = float(body[3:])
                        except ValueError:
                            raise InputFormatError(f"bad sampling time {body[3:]!r}", lineno)
                    elif body.startswith("burn_in="):
                        try:
                            burn_in = int(body[8:])
                        except ValueError:
                            raise InputFormatError(f"bad burn_in {body[8:]!r}", lineno)
                    continue
                if header is None:
                    if sampling_time is None:
                        raise InputFormatError("missing '# Ts=<seconds>' comment before header",
                                               lineno)
                    header = [h.strip() for h in line.split(",")]
                    _check_header(header, lineno)
                    continue
                parts = line.split(",")
                if len(parts) != len(header):
                    raise InputFormatError(
                        f"expected {len(header)} columns, found {len(parts)}", lineno
                    )
                try:
                    rows.append([float(v) for v in parts])
                except ValueError as exc:
                    raise InputFormatError(str(exc), lineno)
        if header is None:
            raise InputFormatError("file has no header row")
        if not rows:
            raise InputFormatError("file has no data rows")
        data = np.asarray(rows, dtype=float)
        n_in = sum(1 for h in header if h.startswith("u"))
        n_clean = sum(1 for h in header if h.endswith("_clean"))
        n_out = len(header) - 1 - n_in - n_clean
        inputs = [data[:, 1 + j] for j in range(n_in)]
        outputs = [data[:, 1 + n_in + j] for j in range(n_out)]
        clean = [data[:, 1 + n_in + n_out + j] for j in range(n_clean)] if n_clean else None
        return cls(
            sampling_time=sampling_time,
            inputs=inputs,
            outputs=outputs,
            clean_outputs=clean,
            burn_in=burn_in,
        )


def _as_channel(c) -> np.ndarray:
    arr = np.asarray(c, dtype=float)
    if arr.ndim != 1:
        raise ArgumentError("channels must be 1-D")
    out = np.array(arr)  # private copy
    out.flags.writeable = False
    return out


def _check_header(header: list[str], lineno: int) -> None:
    if not header or header[0] != "t":
        raise InputFormatError("header must start with column 't'", lineno)
    names = header[1:]
    n_in = sum(1 for h in names if h.startswith("u"))
    n_clean = sum(1 for h in names if h.endswith("_clean"))
    n_out = len(names) - n_in - n_clean
    expected = [f"u{i + 1}" for i in range(n_in)]
    expected += [f"y{i + 1}" for i in range(n_out)]
    expected += [f"y{i + 1}_clean" for i in range(n_clean)]
    if names != expected:
        raise InputFormatError(
            f"header columns must be t,u1..uM,y1..yP[,y1_clean..]; got {','.join(header)}",
            lineno,
        )
    if n_clean not in (0, n_out):
        raise InputFormatError("clean output count must match output count", lineno)
