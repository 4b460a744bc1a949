"""Identification toolkit for two-time-scale linear systems.

Core pieces: LTI primitives (transfer functions, fast/slow decomposition,
ZOH discretization), GBN test signals, Butterworth prefiltering, OE/BJ
prediction-error estimators, the filtering-subtraction identification
pipeline, and a Monte Carlo experiment harness. A FastAPI service
(``tsid.service``) wraps the toolkit; the ``tsid`` CLI is a thin client.
"""

from .dataset import TimeSeriesDataset
from .errors import (
    AmbiguousSplitError,
    ArgumentError,
    CalibrationError,
    FilSubStageError,
    IdentifiabilityError,
    InputFormatError,
    TsidError,
    UnsupportedStructureError,
)
from .estimation import (
    EstimationOptions,
    FitReport,
    ModelEstimate,
    OrderScanResult,
    OrderScanRow,
    estimate_bj,
    estimate_oe,
    foe_criterion,
    make_fit_report,
    prediction_residuals,
    relative_error,
    select_order_foe,
)
from .experiments import (
    ExperimentConfig,
    MetricRecord,
    MonteCarloReport,
    MultiEnergySurrogate,
    ReRecord,
    StepEnsemble,
    benchmark_filsub_config,
    benchmark_system,
    run_experiment,
    step_relative_error,
)
from .fileio import (
    LoadedModel,
    SignalConfig,
    load_experiment_config,
    load_filsub_config,
    load_model,
    load_signal_config,
    load_system,
    read_key_values,
    save_fit_report,
    save_model,
    save_order_scan,
)
from .filsub import (
    FilSubConfig,
    TwoTimeScaleModel,
    design_test_signal,
    identify_filsub,
)
from .filtering import (
    FilterSpec,
    apply_filter,
    design_filter,
    filter_signal,
    transient_length,
)
from .lti import (
    Polynomial,
    PoleResidueForm,
    RationalTransferFunction,
    TransferMatrix,
    dc_gain,
    discretize_zoh,
    frequency_response,
    is_stable,
    parallel_add,
    partial_fraction,
    poles,
    resample_zoh,
    rtf,
    series_multiply,
    simulate,
    split_fast_slow,
    step_response,
    undiscretize_zoh,
    zero_tf,
)
from .signals import (
    DisturbanceConfig,
    GbnConfig,
    as_rng,
    band_power_fraction,
    generate_disturbance,
    generate_gbn,
    superpose,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
