"""Request/response models for the HTTP service.

These mirror the toolkit's dataclasses field for field; conversion helpers
keep the numeric payloads as plain JSON lists. Validation beyond shape and
type stays in the core package so the service and direct library use share
one set of rules.
"""

from __future__ import annotations

import numpy as np
from pydantic import BaseModel, ConfigDict

from ..dataset import TimeSeriesDataset
from ..estimation import EstimationOptions, FitReport, OrderScanResult
from ..filsub import FilSubConfig
from ..lti import RationalTransferFunction, rtf


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SystemSpec(_Model):
    """A transfer function: ascending s-polynomial coefficients when
    continuous, z^-1 coefficients when ``sampling_time`` is set."""

    numerator: list[float]
    denominator: list[float]
    sampling_time: float | None = None

    def to_tf(self) -> RationalTransferFunction:
        return rtf(self.numerator, self.denominator, self.sampling_time)


class ModelPayload(_Model):
    """A fitted (or given) model, with an optional noise model."""

    domain: str
    sampling_time: float | None = None
    numerator: list[float]
    denominator: list[float]
    noise_numerator: list[float] | None = None
    noise_denominator: list[float] | None = None

    @classmethod
    def from_tf(
        cls,
        process: RationalTransferFunction,
        noise: RationalTransferFunction | None = None,
    ) -> "ModelPayload":
        return cls(
            domain="discrete" if process.is_discrete else "continuous",
            sampling_time=process.sampling_time,
            numerator=[float(v) for v in process.num.coeffs],
            denominator=[float(v) for v in process.den.coeffs],
            noise_numerator=None if noise is None else [float(v) for v in noise.num.coeffs],
            noise_denominator=None if noise is None else [float(v) for v in noise.den.coeffs],
        )

    def to_tf(self) -> RationalTransferFunction:
        return rtf(self.numerator, self.denominator, self.sampling_time)


class DatasetPayload(_Model):
    """Inline dataset, one list per channel."""

    sampling_time: float
    inputs: list[list[float]] = []
    outputs: list[list[float]] = []
    clean_outputs: list[list[float]] | None = None
    burn_in: int = 0

    @classmethod
    def from_dataset(cls, data: TimeSeriesDataset) -> "DatasetPayload":
        return cls(
            sampling_time=data.sampling_time,
            inputs=[list(map(float, c)) for c in data.inputs],
            outputs=[list(map(float, c)) for c in data.outputs],
            clean_outputs=None if data.clean_outputs is None
            else [list(map(float, c)) for c in data.clean_outputs],
            burn_in=data.burn_in,
        )

    def to_dataset(self) -> TimeSeriesDataset:
        return TimeSeriesDataset(
            sampling_time=self.sampling_time,
            inputs=[np.asarray(c) for c in self.inputs],
            outputs=[np.asarray(c) for c in self.outputs],
            clean_outputs=None if self.clean_outputs is None
            else [np.asarray(c) for c in self.clean_outputs],
            burn_in=self.burn_in,
        )


class SignalSpec(_Model):
    """Test-signal recipe; mirrors the ``SignalConfig`` file format."""

    n_samples: int
    sampling_time: float
    amplitude: float = 1.0
    seed: int = 0
    switch_time: float | None = None
    switch_probability: float | None = None
    slow_switch_time: float | None = None
    noise_to_signal: float = 0.0
    noise_shaping: str = "standard"


class SolverSpec(_Model):
    """Optimizer settings; omitted fields keep the estimator defaults."""

    max_iterations: int | None = None
    loss_tolerance: float | None = None
    stability_enforcement: bool | None = None
    init_order: int | None = None

    def to_options(self) -> EstimationOptions | None:
        # An untouched spec must reach the estimators as "no options" so each
        # entry point keeps its own default (filsub runs a looser tolerance
        # than plain estimation).
        if (self.max_iterations is None and self.loss_tolerance is None
                and self.stability_enforcement is None and self.init_order is None):
            return None
        defaults = EstimationOptions()
        return EstimationOptions(
            max_iterations=self.max_iterations if self.max_iterations is not None
            else defaults.max_iterations,
            loss_tolerance=self.loss_tolerance if self.loss_tolerance is not None
            else defaults.loss_tolerance,
            stability_enforcement=self.stability_enforcement
            if self.stability_enforcement is not None
            else defaults.stability_enforcement,
            init_order=self.init_order,
        )


class FilSubSpec(_Model):
    """Filtering-subtraction configuration; mirrors ``FilSubConfig``."""

    fast_cutoff: float
    slow_cutoff: float
    order: int = 2
    fast_order: int | None = None
    slow_order: int | None = None
    estimator: str = "oe"
    noise_order: int = 1
    filter_cutoff: float | None = None
    filter_order: int = 4
    decimate: bool = True
    scale_ratio_min: float = 30.0
    band_power_min: float = 0.10

    def to_config(self) -> FilSubConfig:
        return FilSubConfig(
            fast_cutoff=self.fast_cutoff,
            slow_cutoff=self.slow_cutoff,
            order=self.order,
            fast_order=self.fast_order,
            slow_order=self.slow_order,
            estimator=self.estimator,
            noise_order=self.noise_order,
            filter_cutoff=self.filter_cutoff,
            filter_order=self.filter_order,
            decimate=self.decimate,
            scale_ratio_min=self.scale_ratio_min,
            band_power_min=self.band_power_min,
        )


class SimulateRequest(_Model):
    system: SystemSpec
    signal: SignalSpec


class IdentifyRequest(_Model):
    data: DatasetPayload
    method: str = "oe"
    order: int = 2
    noise_order: int = 1
    solver: SolverSpec = SolverSpec()
    filsub: FilSubSpec | None = None


class FitReportPayload(_Model):
    method: str
    order: int
    noise_order: int
    n_parameters: int
    loss: float
    foe: float
    iterations: int
    converged: bool
    relative_error: float | None = None

    @classmethod
    def from_report(cls, report: FitReport) -> "FitReportPayload":
        return cls(
            method=report.method,
            order=report.order,
            noise_order=report.noise_order,
            n_parameters=report.n_parameters,
            loss=report.loss_value,
            foe=report.foe_value,
            iterations=report.iterations_used,
            converged=report.converged,
            relative_error=report.relative_error,
        )


class IdentifyResponse(_Model):
    model: ModelPayload
    report: FitReportPayload
    residuals: list[float]
    fast: ModelPayload | None = None
    slow: ModelPayload | None = None
    decimation_factor: int | None = None


class OrderScanRequest(_Model):
    data: DatasetPayload
    orders: list[int]
    method: str = "oe"
    noise_order: int = 1
    solver: SolverSpec = SolverSpec()


class OrderScanRow(_Model):
    order: int
    foe: float
    loss: float
    n_parameters: int
    converged: bool


class OrderScanResponse(_Model):
    rows: list[OrderScanRow]
    selected_order: int

    @classmethod
    def from_result(cls, result: OrderScanResult) -> "OrderScanResponse":
        return cls(
            rows=[
                OrderScanRow(
                    order=row.order,
                    foe=row.foe,
                    loss=row.loss,
                    n_parameters=row.n_parameters,
                    converged=row.converged,
                )
                for row in result.rows
            ],
            selected_order=result.selected_order,
        )


class ExperimentRequest(_Model):
    """Mirrors ``ExperimentConfig``, plus a switch for the bulky step data."""

    scenario: str
    seeds: int = 20
    noise_to_signal: float | None = None
    duration: float | None = None
    amplitude: float = 1.0
    step_horizon: float = 200.0
    solver_iterations: int | None = None
    solver_tolerance: float | None = None
    filter_order: int = 4
    decimate: bool = True
    include_steps: bool = True


class ReRecordPayload(_Model):
    seed: int
    method: str
    re: float


class MetricRecordPayload(_Model):
    seed: int
    method: str
    metric: str
    value: float


class MethodSummary(_Model):
    median: float
    first_quartile: float
    third_quartile: float


class StepEnsemblePayload(_Model):
    time: list[float]
    true: list[float]
    responses: list[list[float]]


class ExperimentResponse(_Model):
    scenario: str
    seeds: list[int]
    records: list[ReRecordPayload]
    metrics: list[MetricRecordPayload]
    summary: dict[str, MethodSummary]
    steps: dict[str, StepEnsemblePayload] = {}


class HealthResponse(_Model):
    status: str
    version: str


class ErrorBody(_Model):
    """Machine-readable error shape returned with HTTP 400."""

    error: str
    message: str
    stage: str | None = None
    line: int | None = None
