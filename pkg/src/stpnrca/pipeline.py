"""End-to-end orchestration: configuration, training bundles, detection, RCA.

Everything the command-line layer does is implemented here so library users
and the benchmark suites drive the exact same code paths.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .association import (
    MlpConfig,
    MlpParams,
    generate_artificial_anomalies,
    infer_a3,
    train_a3,
)
from .errors import DataError, UsageError
from .nodes import infer_nodes, rank_nodes
from .persist import (
    load_mlp,
    load_rbm,
    load_stpn,
    save_mlp,
    save_rbm,
    save_stpn,
)
from .rbm import RbmConfig, RbmParams, calibrate_threshold, free_energy, train_rbm
from .stpn import StpnConfig, StpnModel, index_pattern, scan_windows, train_stpn
from .switching import s3_search
from .synth import var_fit, var_rca_baseline
from .timeseries import TimeSeries

CONFIG_ENV_VAR = "STPNRCA_CONFIG"


@dataclass(frozen=True)
class RunConfig:
    """Every tunable of the pipeline, with reference-experiment defaults.

    Readable from a ``key = value`` text file (unknown keys are rejected)
    with command-line overrides applied on top.
    """

    alphabet_size: int = 9
    depth: int = 1
    lag: int = 1
    window_length: int = 1200
    stride: int = 0  # 0 -> window_length
    threshold_quantile: float = 0.05
    partition_method: str = "mep"
    rbm_hidden: int = 64
    rbm_epochs: int = 200
    rbm_learning_rate: float = 0.05
    rbm_batch_size: int = 32
    detector_kappa: float = 1.0
    a3_hidden: tuple[int, ...] = (256, 256)
    a3_dropout: float = 0.5
    a3_learning_rate: float = 0.1
    a3_momentum: float = 0.9
    a3_batch_size: int = 128
    a3_epochs: int = 200
    a3_patience: int = 10
    a3_flip_orders: tuple[int, ...] = (1, 2, 3, 4)
    a3_samples_per_order: int = 20
    a3_cutoff: float = 0.5
    var_lag: int = 1
    var_eta: float = 0.4
    seed: int = 0

    def stpn_config(self) -> StpnConfig:
        return StpnConfig(
            alphabet_size=self.alphabet_size,
            depth=self.depth,
            lag=self.lag,
            window_length=self.window_length,
            stride=self.stride or None,
            threshold_quantile=self.threshold_quantile,
            partition_method=self.partition_method,
        )

    def rbm_config(self) -> RbmConfig:
        return RbmConfig(
            n_hidden=self.rbm_hidden,
            epochs=self.rbm_epochs,
            learning_rate=self.rbm_learning_rate,
            batch_size=self.rbm_batch_size,
            seed=self.seed,
        )

    def mlp_config(self) -> MlpConfig:
        return MlpConfig(
            hidden=self.a3_hidden,
            dropout=self.a3_dropout,
            learning_rate=self.a3_learning_rate,
            momentum=self.a3_momentum,
            batch_size=self.a3_batch_size,
            epochs=self.a3_epochs,
            patience=self.a3_patience,
            seed=self.seed,
        )

    def fingerprint(self) -> str:
        doc = json.dumps(dataclasses.asdict(self), sort_keys=True, default=list)
        return hashlib.sha256(doc.encode()).hexdigest()[:16]

    @classmethod
    def from_sources(
        cls, path: str | None = None, overrides: dict | None = None
    ) -> "RunConfig":
        """Defaults, then an optional config file, then explicit overrides."""
        values: dict = {}
        if path is None:
            path = os.environ.get(CONFIG_ENV_VAR) or None
        if path:
            values.update(_parse_config_file(path))
        for key, raw in (overrides or {}).items():
            values[key] = raw
        fields = {f.name: f for f in dataclasses.fields(cls)}
        parsed = {}
        for key, raw in values.items():
            if key not in fields:
                raise UsageError(f"unknown config key {key!r}")
            parsed[key] = _coerce(raw, fields[key].type, key)
        return cls(**parsed)


def _parse_config_file(path: str) -> dict:
    if not os.path.exists(path):
        raise UsageError(f"config file not found: {path}")
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def _coerce(raw, annotation, key):
    if not isinstance(raw, str):
        return raw
    annotation = str(annotation)
    try:
        if annotation.startswith("tuple"):
            return tuple(int(x) for x in raw.replace(",", " ").split())
        if annotation == "int":
            return int(raw)
        if annotation == "float":
            return float(raw)
        return raw
    except ValueError:
        raise UsageError(f"config key {key!r}: cannot parse {raw!r}") from None


@dataclass(frozen=True, eq=False)
class TrainedBundle:
    """Trained pattern network, energy model, and optional classifier."""

    stpn: StpnModel
    rbm: RbmParams
    energy_threshold: float
    config: RunConfig
    mlp: MlpParams | None = None
    training_vectors: np.ndarray | None = field(default=None, repr=False)


def train_bundle(
    nominal: TimeSeries | list[TimeSeries],
    config: RunConfig = RunConfig(),
    with_a3: bool = False,
    keep_vectors: bool = True,
) -> TrainedBundle:
    """Train the pattern network, the energy model, and optionally the classifier."""
    series = [nominal] if isinstance(nominal, TimeSeries) else list(nominal)
    model = train_stpn(series, config.stpn_config())
    stride = config.stride or config.window_length
    vectors = np.vstack(
        [scan_windows(model, ts, stride).vectors for ts in series]
    ).astype(float)
    rbm = train_rbm(vectors, config.rbm_config())
    threshold = calibrate_threshold(rbm, vectors, kappa=config.detector_kappa)
    mlp = None
    if with_a3:
        data = generate_artificial_anomalies(
            vectors,
            flip_orders=config.a3_flip_orders,
            samples_per_order=config.a3_samples_per_order,
            seed=config.seed,
        )
        mlp = train_a3(data, config.mlp_config())
    return TrainedBundle(
        stpn=model,
        rbm=rbm,
        energy_threshold=threshold,
        config=config,
        mlp=mlp,
        training_vectors=vectors if keep_vectors else None,
    )


BUNDLE_FILES = {
    "stpn": "stpn.json",
    "rbm": "rbm.json",
    "mlp": "a3.json",
    "run": "run.json",
}


def save_bundle(bundle: TrainedBundle, directory: str | os.PathLike) -> None:
    directory = os.fspath(directory)
    os.makedirs(directory, exist_ok=True)
    save_stpn(bundle.stpn, os.path.join(directory, BUNDLE_FILES["stpn"]))
    save_rbm(
        bundle.rbm,
        os.path.join(directory, BUNDLE_FILES["rbm"]),
        threshold=bundle.energy_threshold,
    )
    if bundle.mlp is not None:
        save_mlp(bundle.mlp, os.path.join(directory, BUNDLE_FILES["mlp"]))
    run = {
        "config": dataclasses.asdict(bundle.config),
        "fingerprint": bundle.config.fingerprint(),
    }
    run_path = os.path.join(directory, BUNDLE_FILES["run"])
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(run, fh, sort_keys=True, indent=1, default=list)
        os.replace(tmp, run_path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_bundle(directory: str | os.PathLike) -> TrainedBundle:
    directory = os.fspath(directory)
    run_path = os.path.join(directory, BUNDLE_FILES["run"])
    if not os.path.exists(run_path):
        raise DataError(f"{directory}: not a model bundle (missing run.json)")
    with open(run_path) as fh:
        run = json.load(fh)
    raw = dict(run["config"])
    for key in ("a3_hidden", "a3_flip_orders"):
        raw[key] = tuple(raw[key])
    config = RunConfig(**raw)
    stpn = load_stpn(os.path.join(directory, BUNDLE_FILES["stpn"]))
    rbm, threshold = load_rbm(os.path.join(directory, BUNDLE_FILES["rbm"]))
    if threshold is None:
        raise DataError(f"{directory}: energy model saved without a threshold")
    mlp_path = os.path.join(directory, BUNDLE_FILES["mlp"])
    mlp = load_mlp(mlp_path) if os.path.exists(mlp_path) else None
    return TrainedBundle(
        stpn=stpn, rbm=rbm, energy_threshold=threshold, config=config, mlp=mlp
    )


def rca_vector(bundle: TrainedBundle, vector: np.ndarray, method: str):
    """Failed patterns and weights for one pattern vector.

    Returns (patterns, weights, trace); the trace is empty for the
    classifier method.
    """
    if method == "s3":
        result = s3_search(bundle.rbm, vector)
        return list(result.anomalous_patterns), list(result.weights), list(result.trace)
    if method == "a3":
        if bundle.mlp is None:
            raise UsageError("bundle has no trained classifier (train with --a3)")
        indicator, probs = infer_a3(bundle.mlp, vector, cutoff=bundle.config.a3_cutoff)
        patterns = [int(i) for i in np.flatnonzero(indicator == 0)]
        weights = [float(1.0 - probs[i]) for i in patterns]
        return patterns, weights, []
    raise UsageError(f"unknown method {method!r} (use s3, a3, or var)")


def run_detect(bundle: TrainedBundle, ts: TimeSeries, stride: int | None = None):
    """Per-window verdict stream: (starts, free energies, anomalous flags)."""
    scan = scan_windows(bundle.stpn, ts, stride)
    energies = np.atleast_1d(free_energy(bundle.rbm, scan.vectors.astype(float)))
    return scan.starts, energies, energies > bundle.energy_threshold


def run_rca(
    bundle: TrainedBundle,
    ts: TimeSeries,
    method: str = "s3",
    force: bool = False,
    stride: int | None = None,
    data_path: str = "",
) -> dict:
    """Window-level root-cause analysis plus a case-level aggregate.

    Only windows flagged anomalous are analyzed unless `force`. A pattern
    counts as failed for the case when it is flagged in at least half of the
    analyzed windows; its case weight is the sum of its per-window weights.
    The node ranking covers the failed set first (greedy cover order), then
    the remaining channels by anomaly score.
    """
    f = bundle.stpn.n_channels
    scan = scan_windows(bundle.stpn, ts, stride)
    energies = np.atleast_1d(free_energy(bundle.rbm, scan.vectors.astype(float)))
    flags = energies > bundle.energy_threshold

    windows = []
    flagged_counts: dict[int, int] = {}
    weight_sums: dict[int, float] = {}
    n_analyzed = 0
    for i, start in enumerate(scan.starts):
        entry = {
            "start": int(start),
            "free_energy": float(energies[i]),
            "anomalous": bool(flags[i]),
            "analyzed": bool(flags[i] or force),
            "patterns": [],
        }
        if entry["analyzed"]:
            n_analyzed += 1
            patterns, weights, trace = rca_vector(
                bundle, scan.vectors[i].astype(float), method
            )
            entry["patterns"] = [
                {
                    "index": int(p),
                    "source": index_pattern(p, f)[0],
                    "target": index_pattern(p, f)[1],
                    "weight": float(w),
                }
                for p, w in zip(patterns, weights)
            ]
            if trace:
                entry["trace"] = [float(x) for x in trace]
            for p, w in zip(patterns, weights):
                flagged_counts[p] = flagged_counts.get(p, 0) + 1
                weight_sums[p] = weight_sums.get(p, 0.0) + float(w)
        windows.append(entry)

    majority = {
        p for p, c in flagged_counts.items() if n_analyzed and c >= 0.5 * n_analyzed
    }
    failed = sorted(majority)
    weighted = [(p, weight_sums[p]) for p in failed]
    inference = infer_nodes(weighted, f)
    ranking, ranking_scores = rank_nodes(weighted, f)

    return {
        "method": method,
        "config_fingerprint": bundle.config.fingerprint(),
        "data": data_path,
        "channels": list(bundle.stpn.names),
        "window_length": bundle.stpn.window_length,
        "n_windows": int(len(scan.starts)),
        "n_analyzed": int(n_analyzed),
        "forced": bool(force),
        "energy_threshold": float(bundle.energy_threshold),
        "windows": windows,
        "aggregate": {
            "failed_patterns": [
                {
                    "index": int(p),
                    "source": index_pattern(p, f)[0],
                    "target": index_pattern(p, f)[1],
                    "weight": float(w),
                    "window_fraction": flagged_counts[p] / max(n_analyzed, 1),
                }
                for p, w in weighted
            ],
            "nodes": [
                {"node": int(n), "name": bundle.stpn.names[n], "score": float(s)}
                for n, s in zip(inference.nodes, inference.scores)
            ],
            "ranking": [
                {"node": int(n), "name": bundle.stpn.names[n], "score": float(s)}
                for n, s in zip(ranking, ranking_scores)
            ],
        },
    }


def evaluate_case(report: dict, labels: dict) -> dict:
    """Score one RCA report against its ground-truth sidecar.

    Pattern-break cases get per-window accuracy and pooled recall/precision/
    F-measure; node faults get the error ratio (patterns not incident to the
    injected node), node-set agreement, and the diagnosis cost; label files
    without a fault are treated as false-alarm cases.
    """
    from .metrics import (
        diagnosis_cost,
        error_ratio,
        false_alarm_pattern_fraction,
        prf_counts,
    )

    f = len(labels["channels"])
    total = f * f
    agg_patterns = {p["index"] for p in report["aggregate"]["failed_patterns"]}
    window_sets = [
        {p["index"] for p in w["patterns"]}
        for w in report.get("windows", [])
        if w.get("analyzed")
    ] or [agg_patterns]

    out: dict = {
        "case_id": labels.get("case_id", ""),
        "method": report["method"],
        "fault": labels.get("fault"),
        "n_windows_analyzed": report["n_analyzed"],
    }
    fault = labels.get("fault")
    if fault is None:
        out["false_alarm_fraction"] = false_alarm_pattern_fraction(window_sets, f)
        truth: set[int] = set()
        matches = [total - len(s) for s in window_sets]
        out["alpha1"] = float(np.mean(matches)) / total
        return out

    if fault["kind"] == "pattern_break":
        truth = set(labels["failed_patterns"])
        matches = [total - len(truth ^ s) for s in window_sets]
        out["alpha1"] = float(np.mean(matches)) / total
        tp = sum(len(truth & s) for s in window_sets)
        fn = sum(len(truth - s) for s in window_sets)
        fp = sum(len(s - truth) for s in window_sets)
        recall, precision, fmeasure = prf_counts(tp, fn, fp)
        out.update(recall=recall, precision=precision, f_measure=fmeasure)
        out["error_ratio"] = error_ratio(sorted(agg_patterns), lambda i: i in truth)
        return out

    true_nodes = set(labels["failed_nodes"])

    def incident(i: int) -> bool:
        a, b = index_pattern(i, f)
        return a in true_nodes or b in true_nodes

    out["n_predicted"] = len(agg_patterns)
    out["n_incorrect"] = sum(1 for i in agg_patterns if not incident(i))
    out["error_ratio"] = error_ratio(sorted(agg_patterns), incident)
    selected = {n["node"] for n in report["aggregate"]["nodes"]}
    out["predicted_nodes"] = sorted(selected)
    out["true_nodes"] = sorted(true_nodes)
    ranking = [n["node"] for n in report["aggregate"]["ranking"]]
    costs = [
        diagnosis_cost(ranking, node, max(report["n_analyzed"], 1))
        for node in sorted(true_nodes)
    ]
    out["diagnosis_cost"] = costs[0] if len(costs) == 1 else costs
    return out


def run_var_rca(
    nominal: TimeSeries, test: TimeSeries, config: RunConfig, data_path: str = ""
) -> dict:
    """Baseline report from differencing two least-squares fits."""
    if nominal.names != test.names:
        raise DataError("nominal and test series must share channels")
    f = test.n_channels
    a_nom = var_fit(nominal, config.var_lag)
    a_ano = var_fit(test, config.var_lag)
    failed = var_rca_baseline(a_nom, a_ano, eta=config.var_eta)
    weighted = [(p, 1.0) for p in failed]  # baseline weights fixed at 1
    inference = infer_nodes(weighted, f)
    ranking, ranking_scores = rank_nodes(weighted, f)
    return {
        "method": "var",
        "config_fingerprint": config.fingerprint(),
        "data": data_path,
        "channels": list(test.names),
        "n_windows": 1,
        "n_analyzed": 1,
        "forced": True,
        "windows": [],
        "aggregate": {
            "failed_patterns": [
                {
                    "index": int(p),
                    "source": index_pattern(p, f)[0],
                    "target": index_pattern(p, f)[1],
                    "weight": 1.0,
                    "window_fraction": 1.0,
                }
                for p in failed
            ],
            "nodes": [
                {"node": int(n), "name": test.names[n], "score": float(s)}
                for n, s in zip(inference.nodes, inference.scores)
            ],
            "ranking": [
                {"node": int(n), "name": test.names[n], "score": float(s)}
                for n, s in zip(ranking, ranking_scores)
            ],
        },
    }
