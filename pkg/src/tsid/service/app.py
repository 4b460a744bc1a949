"""HTTP service wrapping the identification toolkit.

Endpoints mirror the library surface one to one: signal generation,
simulation, identification (direct OE/BJ or filtering-subtraction), FOE
order scans, and Monte Carlo experiment runs. Toolkit errors map to HTTP
400 with a machine-readable body carrying the error class name; anything
else is a plain 500.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..dataset import TimeSeriesDataset
from ..errors import ArgumentError, TsidError
from ..estimation import (
    FitReport,
    estimate_bj,
    estimate_oe,
    foe_criterion,
    make_fit_report,
    relative_error,
    select_order_foe,
)
from ..experiments import ExperimentConfig, run_experiment
from ..filsub import identify_filsub
from ..lti import discretize_zoh, simulate
from ..signals import DisturbanceConfig, GbnConfig, generate_disturbance, generate_gbn, superpose
from . import schemas


def _build_signal(spec: schemas.SignalSpec, rng=None) -> np.ndarray:
    """One or two superposed GBN bands from a signal spec, seed-deterministic."""
    if (spec.switch_time is None) == (spec.switch_probability is None):
        raise ArgumentError("exactly one of switch_time / switch_probability is required")
    if spec.switch_probability is not None:
        p = spec.switch_probability
    else:
        p = spec.sampling_time / spec.switch_time
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    u = generate_gbn(spec.n_samples, GbnConfig(p, spec.amplitude), rng)
    if spec.slow_switch_time is not None:
        p_slow = spec.sampling_time / spec.slow_switch_time
        u = superpose(u, generate_gbn(spec.n_samples, GbnConfig(p_slow, spec.amplitude), rng))
    return u


def _simulate_dataset(system, spec: schemas.SignalSpec) -> TimeSeriesDataset:
    """Simulate a system under a signal spec, with the configured disturbance."""
    if system.is_discrete:
        if not np.isclose(system.sampling_time, spec.sampling_time, rtol=1e-9):
            raise ArgumentError(
                f"system sampling time {system.sampling_time} does not match "
                f"the signal ({spec.sampling_time})"
            )
        g = system
    else:
        g = discretize_zoh(system, spec.sampling_time)
    # Draw order is part of the reproducibility contract: signal first,
    # disturbance second, from one generator.
    rng = np.random.default_rng(spec.seed)
    u = _build_signal(spec, rng)
    y0 = simulate(g, u)
    if spec.noise_to_signal > 0:
        if spec.noise_shaping == "white":
            cfg = DisturbanceConfig(spec.noise_to_signal, shaping_num=(1.0,), shaping_den=(1.0,))
        else:
            cfg = DisturbanceConfig(spec.noise_to_signal)
        y = y0 + generate_disturbance(y0, cfg, rng)
    else:
        y = y0
    return TimeSeriesDataset(spec.sampling_time, [u], [y], clean_outputs=[y0])


def _filsub_report(result, data: TimeSeriesDataset) -> FitReport:
    """Flat report for a filtering-subtraction result: the combined model's
    simulation fit, with the parameter count summed over both stages."""
    u = np.asarray(data.inputs[0])
    y = np.asarray(data.outputs[0])
    residuals = y - simulate(result.combined, u)
    n_parameters = result.fast.n_parameters + result.slow.n_parameters
    offset = max(result.combined.den.degree, data.burn_in)
    loss = float(np.mean(residuals[offset:] ** 2))
    re_value = None
    if data.clean_outputs is not None:
        re_value = relative_error(result.combined, data)
    return FitReport(
        method="filsub",
        order=result.combined.den.degree,
        noise_order=0,
        n_parameters=n_parameters,
        loss_value=loss,
        foe_value=foe_criterion(result.combined, data, n_parameters=n_parameters),
        iterations_used=result.fast.iterations_used + result.slow.iterations_used,
        converged=result.fast.converged and result.slow.converged,
        relative_error=re_value,
        residuals=residuals,
    )


def create_app() -> FastAPI:
    app = FastAPI(title="tsid", version=__version__)

    @app.exception_handler(TsidError)
    async def tsid_error_handler(request: Request, exc: TsidError):
        body = schemas.ErrorBody(
            error=type(exc).__name__,
            message=str(exc),
            stage=getattr(exc, "stage", None),
            line=getattr(exc, "line", None),
        )
        return JSONResponse(status_code=400, content=body.model_dump(exclude_none=True))

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/gbn", response_model=schemas.DatasetPayload)
    def gbn(spec: schemas.SignalSpec):
        u = _build_signal(spec)
        data = TimeSeriesDataset(spec.sampling_time, inputs=[u])
        return schemas.DatasetPayload.from_dataset(data)

    @app.post("/simulate", response_model=schemas.DatasetPayload)
    def simulate_endpoint(request: schemas.SimulateRequest):
        data = _simulate_dataset(request.system.to_tf(), request.signal)
        return schemas.DatasetPayload.from_dataset(data)

    @app.post("/identify", response_model=schemas.IdentifyResponse)
    def identify(request: schemas.IdentifyRequest):
        data = request.data.to_dataset()
        options = request.solver.to_options()
        if request.method == "filsub":
            if request.filsub is None:
                raise ArgumentError("method 'filsub' requires the filsub configuration")
            result = identify_filsub(data, request.filsub.to_config(), options=options)
            report = _filsub_report(result, data)
            return schemas.IdentifyResponse(
                model=schemas.ModelPayload.from_tf(result.combined),
                report=schemas.FitReportPayload.from_report(report),
                residuals=[float(v) for v in report.residuals],
                fast=schemas.ModelPayload.from_tf(result.fast_at_data_rate),
                slow=schemas.ModelPayload.from_tf(result.slow_at_data_rate),
                decimation_factor=result.decimation_factor,
            )
        if request.method == "oe":
            est = estimate_oe(data, request.order, options)
        elif request.method == "bj":
            est = estimate_bj(data, request.order, request.noise_order, options)
        else:
            raise ArgumentError(
                f"method must be 'oe', 'bj' or 'filsub', got {request.method!r}"
            )
        report = make_fit_report(est, data, clean_data=data)
        return schemas.IdentifyResponse(
            model=schemas.ModelPayload.from_tf(est.process_model, est.noise_model),
            report=schemas.FitReportPayload.from_report(report),
            residuals=[float(v) for v in report.residuals],
        )

    @app.post("/order-scan", response_model=schemas.OrderScanResponse)
    def order_scan(request: schemas.OrderScanRequest):
        result = select_order_foe(
            request.data.to_dataset(),
            request.orders,
            method=request.method,
            noise_order=request.noise_order,
            options=request.solver.to_options(),
        )
        return schemas.OrderScanResponse.from_result(result)

    @app.post("/experiment", response_model=schemas.ExperimentResponse)
    def experiment(request: schemas.ExperimentRequest):
        config = ExperimentConfig(
            scenario=request.scenario,
            seeds=request.seeds,
            noise_to_signal=request.noise_to_signal,
            duration=request.duration,
            amplitude=request.amplitude,
            step_horizon=request.step_horizon,
            solver_iterations=request.solver_iterations,
            solver_tolerance=request.solver_tolerance,
            filter_order=request.filter_order,
            decimate=request.decimate,
        )
        report = run_experiment(config)
        summary = {}
        for method, _count, q1, med, q3 in report.summary():
            summary[method] = schemas.MethodSummary(
                median=med, first_quartile=q1, third_quartile=q3
            )
        steps = {}
        if request.include_steps:
            for key, ens in report.steps.items():
                steps[key] = schemas.StepEnsemblePayload(
                    time=[float(v) for v in ens.time],
                    true=[float(v) for v in ens.true],
                    responses=[[float(v) for v in row] for row in ens.responses],
                )
        return schemas.ExperimentResponse(
            scenario=report.scenario,
            seeds=list(report.seed_list),
            records=[
                schemas.ReRecordPayload(seed=r.seed, method=r.method, re=r.value)
                for r in report.records
            ],
            metrics=[
                schemas.MetricRecordPayload(
                    seed=m.seed, method=m.method, metric=m.metric, value=m.value
                )
                for m in report.metrics
            ],
            summary=summary,
            steps=steps,
        )

    return app
