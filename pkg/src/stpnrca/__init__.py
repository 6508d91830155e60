"""Pattern-network anomaly detection and root-cause analysis for time series."""

from .association import (
    A3Dataset,
    MlpConfig,
    MlpParams,
    generate_artificial_anomalies,
    infer_a3,
    train_a3,
)
from .errors import (
    DataError,
    DegeneratePartitionError,
    NumericalError,
    StpnRcaError,
    UsageError,
)
from .metrics import (
    EvalReport,
    diagnosis_cost,
    error_ratio,
    false_alarm_pattern_fraction,
    pattern_accuracy,
    prf,
)
from .nodes import NodeInferenceResult, infer_nodes, rank_nodes
from .pipeline import (
    RunConfig,
    TrainedBundle,
    evaluate_case,
    load_bundle,
    run_detect,
    run_rca,
    run_var_rca,
    save_bundle,
    train_bundle,
)
from .rbm import (
    DetectorConfig,
    RbmConfig,
    RbmParams,
    calibrate_threshold,
    detect,
    detect_windows,
    free_energy,
    select_hidden_units,
    switched_free_energy,
    train_rbm,
)
from .stpn import (
    StpnConfig,
    StpnModel,
    binarize,
    index_pattern,
    pattern_index,
    scan_windows,
    train_stpn,
    window_metrics,
)
from .switching import S3Result, exhaustive_switch_oracle, kld_distance, s3_search
from .symbolic import (
    PartitionScheme,
    count_matrix,
    decode_state,
    learn_partition,
    log_inference_metric,
    metric_delta,
    states_from_symbols,
    symbolize,
)
from .synth import (
    CausalGraph,
    FaultSpec,
    builtin_modes,
    case_labels,
    inject_fault,
    pattern_fault_cases,
    random_graph,
    simulate_var,
    var_fit,
    var_rca_baseline,
)
from .timeseries import TimeSeries, read_csv, read_tep_csv, write_csv

__version__ = "0.1.0"
