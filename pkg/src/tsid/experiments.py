"""Monte Carlo experiment harness.

Benchmark studies on a SISO two-time-scale system and a 3x3 multi-energy
surrogate plant:

- ``single_fast`` / ``single_slow`` / ``dual_band``: direct OE and BJ fits
  under band-limited or dual-band excitation, showing which part of the
  dynamics each test can capture;
- ``filsub_validation``: OE and BJ baselines against the
  filtering-subtraction method on identical dual-band data;
- ``consistency``: filtering-subtraction error versus data length;
- ``multi_energy``: channel-by-channel identification of the surrogate
  plant with FOE order scans and fresh-data validation.

Every scenario is deterministic given the seed count: each (scenario, seed)
pair derives its own RNG streams, so reruns and cross-scenario comparisons
on the same seed see identical data.

Solver effort note: the benchmark scenarios run all estimators at a standard
effort (20 iterations, 1e-2 relative loss tolerance) so that methods are
compared under equal, practical stopping rules; the dual-band interference
that motivates the filtering-subtraction method shows up exactly there. The
consistency study, which probes asymptotic behavior, runs at tight settings.
Both can be overridden through ExperimentConfig.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .dataset import TimeSeriesDataset
from .errors import ArgumentError
from .estimation import (
    EstimationOptions,
    estimate_bj,
    estimate_oe,
    relative_error,
    select_order_foe,
)
from .filsub import FilSubConfig, identify_filsub
from .lti import (
    RationalTransferFunction,
    TransferMatrix,
    discretize_zoh,
    frequency_response,
    rtf,
    series_multiply,
    simulate,
    split_fast_slow,
    zero_tf,
)
from .signals import DisturbanceConfig, GbnConfig, generate_disturbance, generate_gbn, superpose

SCENARIOS = (
    "single_fast",
    "single_slow",
    "dual_band",
    "filsub_validation",
    "consistency",
    "multi_energy",
)

# Benchmark test conditions: fast sampling grid, per-sample GBN switching
# probabilities (0.06 at 0.04 s keeps the fast band busy; 6e-4 holds a
# 67 s mean dwell on the same grid), slow-test sampling time.
_TS_FAST = 0.04
_TS_SLOW = 4.0
_P_FAST = 0.06
_P_SLOW = 6e-4

# Stream tags deriving per-seed RNGs. dual_band and filsub_validation share
# a tag on purpose: same seed, same data, so their records are comparable.
_STREAM = {
    "single_fast": 1,
    "single_slow": 2,
    "dual_band": 3,
    "filsub_validation": 3,
    "consistency": 4,
    "multi_energy": 5,
}


def benchmark_system() -> RationalTransferFunction:
    """SISO two-time-scale benchmark.

    A resonant fast block (natural frequency about 7.3 rad/s) in series with
    a lead-lag pair whose pole sits at 1/30 rad/s; DC gain 0.3. The fast and
    slow parts contribute nearly equal shares of the DC gain, so neither band
    can be ignored.
    """
    fast = rtf([0.3], [1.0, 0.166, 0.019])
    lag = rtf([1.0, 15.0], [1.0, 30.0])
    return series_multiply(fast, lag)


def benchmark_filsub_config(estimator: str = "bj", **overrides) -> FilSubConfig:
    """Filtering-subtraction settings matched to the benchmark system."""
    base = dict(
        fast_cutoff=4.4,
        slow_cutoff=1.0 / 30.0,
        fast_order=2,
        slow_order=1,
        estimator=estimator,
        noise_order=1,
    )
    base.update(overrides)
    return FilSubConfig(**base)


@dataclass(frozen=True)
class ExperimentConfig:
    """Configuration of one Monte Carlo experiment.

    Args:
        scenario: one of ``SCENARIOS``.
        seeds: number of Monte Carlo runs; run k uses seed k.
        noise_to_signal: output disturbance variance as a fraction of the
            noise-free output variance; default 0.15 for the benchmark
            scenarios and 0.05 for ``multi_energy``.
        duration: test length in seconds; scenario default when omitted.
            ``multi_energy`` fixes per-channel durations from the channel
            time constants and ignores this field.
        amplitude: GBN level of each test-signal component.
        step_horizon: step-response comparison horizon in seconds.
        solver_iterations / solver_tolerance: estimator stopping overrides;
            scenario defaults when omitted (see module docstring).
        filter_order: Butterworth order inside filtering-subtraction.
        decimate: slow-stage decimation switch of filtering-subtraction.
    """

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

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ArgumentError(
                f"unknown scenario {self.scenario!r}; expected one of {', '.join(SCENARIOS)}"
            )
        if self.seeds < 1:
            raise ArgumentError("seeds must be >= 1")
        if self.noise_to_signal is not None and not 0 <= self.noise_to_signal < 1:
            raise ArgumentError("noise_to_signal must be in [0, 1)")
        if self.duration is not None and self.duration <= 0:
            raise ArgumentError("duration must be positive")
        if self.amplitude < 0:
            raise ArgumentError("amplitude must be >= 0")
        if self.step_horizon <= 0:
            raise ArgumentError("step_horizon must be positive")
        if self.solver_iterations is not None and self.solver_iterations < 1:
            raise ArgumentError("solver_iterations must be >= 1")
        if self.solver_tolerance is not None and self.solver_tolerance <= 0:
            raise ArgumentError("solver_tolerance must be positive")

    @property
    def effective_noise_to_signal(self) -> float:
        if self.noise_to_signal is not None:
            return self.noise_to_signal
        return 0.05 if self.scenario == "multi_energy" else 0.15

    @property
    def effective_duration(self) -> float:
        if self.duration is not None:
            return self.duration
        return 2560.0 if self.scenario == "consistency" else 4000.0

    def solver_options(self) -> EstimationOptions:
        if self.scenario == "consistency" or self.effective_noise_to_signal == 0.0:
            # Noise-free records keep improving by large relative steps all
            # the way down to the numerical floor, so the moderate-effort
            # stopping rule would quit while the loss is still falling.
            iters, tol = 200, 1e-6
        else:
            iters, tol = 20, 1e-2
        if self.solver_iterations is not None:
            iters = self.solver_iterations
        if self.solver_tolerance is not None:
            tol = self.solver_tolerance
        return EstimationOptions(max_iterations=iters, loss_tolerance=tol)


@dataclass(frozen=True)
class ReRecord:
    seed: int
    method: str
    value: float


@dataclass(frozen=True)
class MetricRecord:
    seed: int
    method: str
    metric: str
    value: float


@dataclass(frozen=True, eq=False)
class StepEnsemble:
    """Step responses of one method across seeds, on a shared time grid."""

    time: np.ndarray
    true: np.ndarray
    responses: np.ndarray  # shape (n_seeds, len(time)), seed order = seed_list


@dataclass(frozen=True, eq=False)
class MonteCarloReport:
    """Per-seed results of one experiment scenario.

    ``records`` holds the headline relative error per (seed, method);
    ``metrics`` holds auxiliary named values (step-window errors,
    frequency-response errors, selected orders); ``steps`` holds
    step-response ensembles for plotting.
    """

    scenario: str
    seed_list: tuple
    records: tuple
    metrics: tuple = ()
    steps: Mapping[str, StepEnsemble] = field(default_factory=dict)

    def __post_init__(self):
        for rec in self.records:
            if not (math.isfinite(rec.value) and rec.value >= 0):
                raise ArgumentError(
                    f"relative error must be finite and >= 0, got {rec.value!r} "
                    f"for seed {rec.seed} method {rec.method}"
                )

    @property
    def methods(self) -> tuple:
        seen = {}
        for rec in self.records:
            seen.setdefault(rec.method, None)
        return tuple(seen)

    def re_values(self, method: str) -> np.ndarray:
        vals = [rec.value for rec in self.records if rec.method == method]
        if not vals:
            raise ArgumentError(f"no records for method {method!r}")
        return np.asarray(vals)

    def median_re(self, method: str) -> float:
        return float(np.median(self.re_values(method)))

    def quartiles(self, method: str) -> tuple:
        q1, med, q3 = np.percentile(self.re_values(method), [25, 50, 75])
        return float(q1), float(med), float(q3)

    def metric_values(self, method: str, metric: str) -> np.ndarray:
        vals = [m.value for m in self.metrics if m.method == method and m.metric == metric]
        if not vals:
            raise ArgumentError(f"no metric {metric!r} for method {method!r}")
        return np.asarray(vals)

    def summary(self) -> tuple:
        rows = []
        for method in self.methods:
            vals = self.re_values(method)
            q1, med, q3 = self.quartiles(method)
            rows.append((method, len(vals), q1, med, q3))
        return tuple(rows)

    def save(self, out_dir) -> list:
        """Write report.csv, summary.csv, metrics.csv, steps_<key>.csv."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = []

        path = out / "report.csv"
        lines = ["seed,method,re"]
        lines += [f"{r.seed},{r.method},{r.value!r}" for r in self.records]
        path.write_text("\n".join(lines) + "\n")
        written.append(path)

        path = out / "summary.csv"
        lines = ["method,count,q1,median,q3"]
        lines += [f"{m},{n},{q1!r},{med!r},{q3!r}" for m, n, q1, med, q3 in self.summary()]
        path.write_text("\n".join(lines) + "\n")
        written.append(path)

        if self.metrics:
            path = out / "metrics.csv"
            lines = ["seed,method,metric,value"]
            lines += [f"{m.seed},{m.method},{m.metric},{m.value!r}" for m in self.metrics]
            path.write_text("\n".join(lines) + "\n")
            written.append(path)

        for key, ens in self.steps.items():
            path = out / f"steps_{key}.csv"
            header = "time,true," + ",".join(f"seed_{s}" for s in self.seed_list)
            rows = [header]
            for i in range(ens.time.size):
                vals = [repr(float(ens.time[i])), repr(float(ens.true[i]))]
                vals += [repr(float(v)) for v in ens.responses[:, i]]
                rows.append(",".join(vals))
            path.write_text("\n".join(rows) + "\n")
            written.append(path)
        return written


def step_relative_error(
    true_step: np.ndarray,
    model_step: np.ndarray,
    time: np.ndarray | None = None,
    window: tuple | None = None,
) -> float:
    """Variance-ratio error between step responses, optionally windowed.

    Same functional form as the data-domain relative error:
    ``var(true - model) / var(true)`` over the (windowed) grid.
    """
    true_step = np.asarray(true_step, dtype=float)
    model_step = np.asarray(model_step, dtype=float)
    if window is not None:
        if time is None:
            raise ArgumentError("windowed step error needs the time grid")
        mask = (np.asarray(time) >= window[0]) & (np.asarray(time) <= window[1])
        true_step = true_step[mask]
        model_step = model_step[mask]
    denom = float(np.var(true_step))
    if denom == 0.0:
        raise ArgumentError("true step response has zero variance on the window")
    return float(np.var(model_step - true_step) / denom)


def _step_grid(horizon: float) -> tuple:
    n = int(round(horizon / _TS_FAST)) + 1
    return np.arange(n) * _TS_FAST, n


def _model_step_on_grid(tf: RationalTransferFunction, n_grid: int) -> np.ndarray:
    """Step response resampled to the fast grid by holding between samples."""
    ratio = tf.sampling_time / _TS_FAST
    k = int(round(ratio))
    if abs(ratio - k) > 1e-9 or k < 1:
        raise ArgumentError(
            f"model sampling time {tf.sampling_time!r} is not a multiple of the "
            f"evaluation grid {_TS_FAST!r}"
        )
    n_model = -(-n_grid // k)
    s = simulate(tf, np.ones(n_model))
    return np.repeat(s, k)[:n_grid]


def _disturbed(y0: np.ndarray, n2s: float, rng, white: bool = False) -> np.ndarray:
    if n2s == 0.0:
        return y0.copy()
    cfg = DisturbanceConfig(n2s)
    if white:
        # White output noise keeps FOE's parameter penalty honest: with the
        # shaped disturbance, residual autocorrelation spans several samples
        # and FPE-form criteria systematically over-select the order.
        cfg = DisturbanceConfig(n2s, shaping_num=(1.0,), shaping_den=(1.0,))
    return y0 + generate_disturbance(y0, cfg, rng)


def _benchmark_data(scenario: str, seed: int, config: ExperimentConfig) -> TimeSeriesDataset:
    """Per-seed benchmark dataset under the scenario's test conditions."""
    rng = np.random.default_rng([_STREAM[scenario], seed])
    n2s = config.effective_noise_to_signal
    amp = config.amplitude
    g = benchmark_system()
    if scenario == "single_slow":
        # Slow test: GBN on the 4 s grid. The disturbance keeps its fast-rate
        # character: generated on the 0.04 s grid against the fast-rate
        # response, sampled every 100th point, then rescaled so the delivered
        # record meets the target ratio exactly.
        n_slow = int(round(config.effective_duration / _TS_SLOW))
        u = generate_gbn(n_slow, GbnConfig(_P_FAST, amp), rng)
        y0 = simulate(discretize_zoh(g, _TS_SLOW), u)
        if n2s == 0.0:
            return TimeSeriesDataset(_TS_SLOW, [u], [y0.copy()], clean_outputs=[y0])
        u_fast = np.repeat(u, int(round(_TS_SLOW / _TS_FAST)))
        y0_fast = simulate(discretize_zoh(g, _TS_FAST), u_fast)
        v = generate_disturbance(y0_fast, DisturbanceConfig(n2s), rng)[:: int(round(_TS_SLOW / _TS_FAST))]
        v *= math.sqrt(n2s * np.var(y0) / np.var(v))
        return TimeSeriesDataset(_TS_SLOW, [u], [y0 + v], clean_outputs=[y0])

    n = int(round(config.effective_duration / _TS_FAST))
    if scenario == "single_fast":
        u = generate_gbn(n, GbnConfig(_P_FAST, amp), rng)
    else:  # dual-band conditions, also used by filsub_validation and consistency
        u = superpose(
            generate_gbn(n, GbnConfig(_P_FAST, amp), rng),
            generate_gbn(n, GbnConfig(_P_SLOW, amp), rng),
        )
    y0 = simulate(discretize_zoh(g, _TS_FAST), u)
    return TimeSeriesDataset(_TS_FAST, [u], [_disturbed(y0, n2s, rng)], clean_outputs=[y0])


def run_band_scenario(config: ExperimentConfig) -> MonteCarloReport:
    """Direct OE and BJ fits under one excitation scenario.

    Records the data-domain relative error per method plus step-response
    errors over the full horizon (``step_re_full``) and the fast window 0-2 s
    (``step_re_fast``).
    """
    if config.scenario not in ("single_fast", "single_slow", "dual_band"):
        raise ArgumentError(f"not a band scenario: {config.scenario!r}")
    opts = config.solver_options()
    seed_list = tuple(range(config.seeds))
    time, n_grid = _step_grid(config.step_horizon)
    true_step = _model_step_on_grid(discretize_zoh(benchmark_system(), _TS_FAST), n_grid)

    records, metrics = [], []
    steps = {m: np.empty((config.seeds, n_grid)) for m in ("oe", "bj")}
    for seed in seed_list:
        data = _benchmark_data(config.scenario, seed, config)
        fits = {
            "oe": estimate_oe(data, 3, opts),
            "bj": estimate_bj(data, 3, 1, opts),
        }
        for method, est in fits.items():
            records.append(ReRecord(seed, method, relative_error(est, data)))
            s = _model_step_on_grid(est.process_model, n_grid)
            steps[method][seed] = s
            metrics.append(MetricRecord(seed, method, "step_re_full",
                                        step_relative_error(true_step, s)))
            metrics.append(MetricRecord(seed, method, "step_re_fast",
                                        step_relative_error(true_step, s, time, (0.0, 2.0))))
    ensembles = {m: StepEnsemble(time, true_step, steps[m]) for m in steps}
    return MonteCarloReport(config.scenario, seed_list, tuple(records), tuple(metrics), ensembles)


def run_filsub_validation(config: ExperimentConfig) -> MonteCarloReport:
    """OE and BJ baselines against filtering-subtraction on identical data."""
    if config.scenario != "filsub_validation":
        raise ArgumentError(f"expected scenario filsub_validation, got {config.scenario!r}")
    opts = config.solver_options()
    fs_cfg = benchmark_filsub_config(
        filter_order=config.filter_order, decimate=config.decimate
    )
    seed_list = tuple(range(config.seeds))
    time, n_grid = _step_grid(config.step_horizon)
    true_step = _model_step_on_grid(discretize_zoh(benchmark_system(), _TS_FAST), n_grid)

    records, metrics = [], []
    steps = {m: np.empty((config.seeds, n_grid)) for m in ("oe", "bj", "filsub")}
    for seed in seed_list:
        data = _benchmark_data(config.scenario, seed, config)
        models = {
            "oe": estimate_oe(data, 3, opts),
            "bj": estimate_bj(data, 3, 1, opts),
            "filsub": identify_filsub(data, fs_cfg, options=opts).combined,
        }
        for method, model in models.items():
            records.append(ReRecord(seed, method, relative_error(model, data)))
            tf = model if isinstance(model, RationalTransferFunction) else model.process_model
            s = _model_step_on_grid(tf, n_grid)
            steps[method][seed] = s
            metrics.append(MetricRecord(seed, method, "step_re_full",
                                        step_relative_error(true_step, s)))
            metrics.append(MetricRecord(seed, method, "step_re_fast",
                                        step_relative_error(true_step, s, time, (0.0, 2.0))))
    ensembles = {m: StepEnsemble(time, true_step, steps[m]) for m in steps}
    return MonteCarloReport(config.scenario, seed_list, tuple(records), tuple(metrics), ensembles)


def _fr_relative_error(model: RationalTransferFunction,
                       truth: RationalTransferFunction,
                       w: np.ndarray) -> float:
    h_m = frequency_response(model, w)
    h_t = frequency_response(truth, w)
    return float(np.sqrt(np.sum(np.abs(h_m - h_t) ** 2) / np.sum(np.abs(h_t) ** 2)))


def run_consistency_study(config: ExperimentConfig) -> MonteCarloReport:
    """Filtering-subtraction error versus data length.

    Each seed draws one dual-band record; fits run on nested prefixes of it
    (quarter steps: N/16, N/4, N), so longer data extends shorter data and
    per-seed errors are directly comparable. Sub-model frequency-response
    errors against the true fast/slow split are recorded per stage and
    length, for OE and BJ variants of the method.
    """
    if config.scenario != "consistency":
        raise ArgumentError(f"expected scenario consistency, got {config.scenario!r}")
    opts = config.solver_options()
    seed_list = tuple(range(config.seeds))
    g = benchmark_system()
    g_fast, g_slow = split_fast_slow(g)
    fast_true = discretize_zoh(g_fast, _TS_FAST)
    slow_true = discretize_zoh(g_slow, _TS_FAST)
    cutoff = benchmark_filsub_config().effective_filter_cutoff
    w_fast = np.geomspace(cutoff, 0.5 * math.pi / _TS_FAST, 200)
    w_slow = np.geomspace(cutoff / 120.0, cutoff, 200)

    records, metrics = [], []
    for seed in seed_list:
        full = _benchmark_data(config.scenario, seed, config)
        n_full = full.n_samples
        for n in (n_full // 16, n_full // 4, n_full):
            prefix = TimeSeriesDataset(
                full.sampling_time,
                [c[:n] for c in full.inputs],
                [c[:n] for c in full.outputs],
                clean_outputs=[c[:n] for c in full.clean_outputs],
            )
            for estimator in ("oe", "bj"):
                fs_cfg = benchmark_filsub_config(
                    estimator, filter_order=config.filter_order, decimate=config.decimate
                )
                model = identify_filsub(prefix, fs_cfg, options=opts)
                label = f"filsub_{estimator}_n{n}"
                records.append(ReRecord(seed, label, relative_error(model.combined, prefix)))
                metrics.append(MetricRecord(
                    seed, f"filsub_{estimator}", f"fr_fast_n{n}",
                    _fr_relative_error(model.fast_at_data_rate, fast_true, w_fast)))
                metrics.append(MetricRecord(
                    seed, f"filsub_{estimator}", f"fr_slow_n{n}",
                    _fr_relative_error(model.slow_at_data_rate, slow_true, w_slow)))
    return MonteCarloReport(config.scenario, seed_list, tuple(records), tuple(metrics))


# Multi-energy surrogate: output/input names, per-row test conditions.
OUTPUT_NAMES = ("steam", "gas", "heat")
INPUT_NAMES = ("fuel", "air", "bypass")

# Per-output test design: sampling time, GBN mean switch times (seconds),
# record length; chosen from the channel time constants.
_ROW_TS = (10.0, 2.0, 50.0)
_ROW_SWITCH = ((100.0, 2000.0), (30.0, None), (1000.0, None))
_ROW_SAMPLES = (10_000, 16_000, 10_000)
_ROW_STEP_HORIZON = (25_000.0, 350.0, 10_000.0)


@dataclass(frozen=True)
class MultiEnergySurrogate:
    """LTI stand-in for a combined heat-and-power plant, 3 inputs x 3 outputs.

    The steam-power row is two-time-scale (parallel first-order pair at
    ``fast_time_constant`` / ``slow_time_constant``, equal DC shares); the
    gas-power row is fast only and does not respond to the bypass input; the
    heat row is slow only. Channel DC gains are configurable and default
    to 1.
    """

    fast_time_constant: float = 200.0
    slow_time_constant: float = 5000.0
    gas_time_constant: float = 70.0
    heat_time_constant: float = 2000.0
    gains: tuple = ((1.0, 1.0, 1.0), (1.0, 1.0, 0.0), (1.0, 1.0, 1.0))

    def __post_init__(self):
        for tc_name in ("fast_time_constant", "slow_time_constant",
                        "gas_time_constant", "heat_time_constant"):
            if getattr(self, tc_name) <= 0:
                raise ArgumentError(f"{tc_name} must be positive")
        if self.slow_time_constant <= self.fast_time_constant:
            raise ArgumentError("slow_time_constant must exceed fast_time_constant")
        g = self.gains
        if len(g) != 3 or any(len(row) != 3 for row in g):
            raise ArgumentError("gains must be a 3x3 table")
        if any(val < 0 for row in g for val in row):
            raise ArgumentError("gains must be >= 0")
        if g[1][2] != 0.0:
            raise ArgumentError("the gas row has no bypass channel; gains[1][2] must be 0")

    def channel(self, i: int, j: int) -> RationalTransferFunction:
        gain = self.gains[i][j]
        if i == 1 and j == 2:
            return zero_tf()
        if i == 0:
            half = 0.5 * gain
            return rtf([half], [1.0, self.fast_time_constant]) + rtf(
                [half], [1.0, self.slow_time_constant])
        tc = self.gas_time_constant if i == 1 else self.heat_time_constant
        return rtf([gain], [1.0, tc])

    def transfer_matrix(self) -> TransferMatrix:
        return TransferMatrix(
            tuple(tuple(self.channel(i, j) for j in range(3)) for i in range(3))
        )

    def active_inputs(self, i: int) -> tuple:
        return tuple(j for j in range(3) if not (i == 1 and j == 2))


def _multi_energy_signal(i: int, n: int, amplitude: float, rng) -> np.ndarray:
    ts = _ROW_TS[i]
    fast_sw, slow_sw = _ROW_SWITCH[i]
    u = generate_gbn(n, GbnConfig(ts / fast_sw, amplitude), rng)
    if slow_sw is not None:
        u = superpose(u, generate_gbn(n, GbnConfig(ts / slow_sw, amplitude), rng))
    return u


def _steam_filsub_config(surrogate: MultiEnergySurrogate, config: ExperimentConfig) -> FilSubConfig:
    # The 200 s / 5000 s separation is a 25x ratio, below the default
    # premise threshold; the config relaxes the guard deliberately.
    return FilSubConfig(
        fast_cutoff=1.0 / surrogate.fast_time_constant,
        slow_cutoff=1.0 / surrogate.slow_time_constant,
        fast_order=1,
        slow_order=1,
        estimator="bj",
        noise_order=1,
        filter_order=config.filter_order,
        decimate=config.decimate,
        scale_ratio_min=20.0,
    )


def run_multi_energy(config: ExperimentConfig,
                     surrogate: MultiEnergySurrogate | None = None) -> MonteCarloReport:
    """Channel-wise identification study on the surrogate plant.

    Per seed and output row: each active input is excited alone with the
    row's test signal, the channel is identified (filtering-subtraction for
    the two-time-scale steam row, plus direct OE/BJ baselines there; BJ at
    the FOE-selected order for the single-time-scale rows), and the row's
    model set is validated on fresh data with all active inputs excited
    simultaneously. Headline records are the validation relative errors per
    (method, output); metrics record FOE order selections per channel.
    """
    if config.scenario != "multi_energy":
        raise ArgumentError(f"expected scenario multi_energy, got {config.scenario!r}")
    surr = MultiEnergySurrogate() if surrogate is None else surrogate
    opts = config.solver_options()
    # Order scans compare model structures by their loss, so the solver must
    # actually converge for every candidate; scans run tight regardless of
    # the harness effort. init_order=1 keeps each candidate on the minimal
    # equation-error start at its own order: a high-order reduction start
    # lets over-ordered candidates land in noise-carving minima whose loss
    # drop exceeds the parsimony factor, wrecking the selection.
    scan_opts = EstimationOptions(max_iterations=200, loss_tolerance=1e-6,
                                  init_order=1)
    n2s = config.effective_noise_to_signal
    amp = config.amplitude
    seed_list = tuple(range(config.seeds))
    fs_cfg = _steam_filsub_config(surr, config)

    channels_d = {}
    for i in range(3):
        for j in surr.active_inputs(i):
            channels_d[(i, j)] = discretize_zoh(surr.channel(i, j), _ROW_TS[i])

    step_keys = []
    for i, out_name in enumerate(OUTPUT_NAMES):
        row_methods = ("filsub", "oe", "bj") if i == 0 else ("bj",)
        for method in row_methods:
            for j in surr.active_inputs(i):
                step_keys.append((method, i, j, f"{method}_{out_name}_{INPUT_NAMES[j]}"))
    step_grid = {}
    for _, i, j, key in step_keys:
        n_step = int(round(_ROW_STEP_HORIZON[i] / _ROW_TS[i])) + 1
        time = np.arange(n_step) * _ROW_TS[i]
        true = simulate(channels_d[(i, j)], np.ones(n_step))
        step_grid[key] = StepEnsemble(time, true, np.empty((config.seeds, n_step)))

    records, metrics = [], []
    for seed in seed_list:
        models = {}
        for i in range(3):
            ts = _ROW_TS[i]
            n = _ROW_SAMPLES[i]
            for j in surr.active_inputs(i):
                rng = np.random.default_rng([_STREAM["multi_energy"], seed, i, j])
                u = _multi_energy_signal(i, n, amp, rng)
                y0 = simulate(channels_d[(i, j)], u)
                data = TimeSeriesDataset(ts, [u], [_disturbed(y0, n2s, rng, white=True)],
                                         clean_outputs=[y0])
                if i == 0:
                    models[("filsub", i, j)] = identify_filsub(data, fs_cfg, options=opts).combined
                    models[("oe", i, j)] = estimate_oe(data, 2, opts).process_model
                    models[("bj", i, j)] = estimate_bj(data, 2, 1, opts).process_model
                    scan = select_order_foe(data, (1, 2, 3, 4), method="bj",
                                            noise_order=1, options=scan_opts)
                    metrics.append(MetricRecord(
                        seed, "bj", f"selected_order_{OUTPUT_NAMES[i]}_{INPUT_NAMES[j]}",
                        float(scan.selected_order)))
                else:
                    scan = select_order_foe(data, (1, 2, 3), method="bj",
                                            noise_order=1, options=scan_opts)
                    metrics.append(MetricRecord(
                        seed, "bj", f"selected_order_{OUTPUT_NAMES[i]}_{INPUT_NAMES[j]}",
                        float(scan.selected_order)))
                    models[("bj", i, j)] = estimate_bj(
                        data, scan.selected_order, 1, opts).process_model

        for method, i, j, key in step_keys:
            ens = step_grid[key]
            ens.responses[seed] = simulate(models[(method, i, j)], np.ones(ens.time.size))

        # Fresh-data validation: all active inputs excited at once.
        for i, out_name in enumerate(OUTPUT_NAMES):
            rng = np.random.default_rng([_STREAM["multi_energy"], seed, i, 9])
            n = _ROW_SAMPLES[i]
            active = surr.active_inputs(i)
            us = {j: _multi_energy_signal(i, n, amp, rng) for j in active}
            y0 = np.sum([simulate(channels_d[(i, j)], us[j]) for j in active], axis=0)
            row_methods = ("filsub", "oe", "bj") if i == 0 else ("bj",)
            for method in row_methods:
                yhat = np.sum([simulate(models[(method, i, j)], us[j]) for j in active], axis=0)
                re = float(np.var(y0 - yhat) / np.var(y0))
                records.append(ReRecord(seed, f"{method}_{out_name}", re))

    ensembles = {key: step_grid[key] for _, _, _, key in step_keys}
    return MonteCarloReport(config.scenario, seed_list, tuple(records), tuple(metrics), ensembles)


def run_experiment(config: ExperimentConfig) -> MonteCarloReport:
    """Dispatch a scenario to its runner."""
    if config.scenario in ("single_fast", "single_slow", "dual_band"):
        return run_band_scenario(config)
    if config.scenario == "filsub_validation":
        return run_filsub_validation(config)
    if config.scenario == "consistency":
        return run_consistency_study(config)
    return run_multi_energy(config)
