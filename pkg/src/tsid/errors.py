"""Exception taxonomy shared across the toolkit.

Every error raised deliberately by this package derives from ``TsidError`` so
callers (CLI, service) can map failures to exit codes / HTTP statuses without
string matching.
"""

from __future__ import annotations


class TsidError(Exception):
    """Base class for all errors raised by this package."""


class ArgumentError(TsidError, ValueError):
    """An argument value is out of its documented domain."""


class UnsupportedStructureError(TsidError, ValueError):
    """The model structure is outside what an operation supports (e.g. repeated poles)."""


class AmbiguousSplitError(TsidError, ValueError):
    """A pole sits too close to the fast/slow threshold to classify safely."""


class IdentifiabilityError(TsidError, ValueError):
    """The data cannot support the requested estimate (e.g. unexcited input)."""


class CalibrationError(TsidError, ValueError):
    """A noise calibration target cannot be met (e.g. zero-variance reference)."""


class FilSubStageError(TsidError, RuntimeError):
    """A stage of the filtering-subtraction pipeline failed.

    Attributes:
        stage: ``"fast"`` or ``"slow"``, naming the stage that failed.
    """

    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage} stage: {message}")
        self.stage = stage


class InputFormatError(TsidError, ValueError):
    """A text input (CSV, config file) is malformed.

    Attributes:
        line: 1-based line number of the offending line, when known.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
