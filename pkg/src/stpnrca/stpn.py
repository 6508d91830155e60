"""Learning the pattern network from nominal data.

The model is an f x f grid of state->symbol count matrices — diagonal
entries describe each channel's own dynamics (atomic patterns), off-diagonal
entries the directed cross-channel dynamics (relational patterns) — plus a
per-pattern binarization threshold on the log inference metric, calibrated
as an empirical quantile over nominal training windows. Short windows are
scored against the grid and binarized into pattern vectors of length f*f.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import DataError
from .symbolic import (
    PartitionScheme,
    count_matrix,
    learn_partition,
    log_inference_metric,
    states_from_symbols,
    symbolize,
)
from .timeseries import TimeSeries


@dataclass(frozen=True)
class StpnConfig:
    """Knobs for model learning; defaults follow the reference experiment."""

    alphabet_size: int = 9
    depth: int = 1
    lag: int = 1
    window_length: int = 1200
    stride: int | None = None  # None -> non-overlapping windows
    threshold_quantile: float = 0.05
    partition_method: str = "mep"

    def __post_init__(self):
        if self.depth < 1 or self.lag < 1:
            raise DataError("depth and lag must be >= 1")
        if self.window_length < self.alphabet_size:
            raise DataError("window_length must be >= alphabet_size")
        if not 0.0 <= self.threshold_quantile < 1.0:
            raise DataError("threshold_quantile must be in [0, 1)")


@dataclass(frozen=True, eq=False)
class StpnModel:
    """Trained pattern network: partition, count grid, and thresholds."""

    names: tuple[str, ...]
    partition: PartitionScheme
    depth: int
    lag: int
    window_length: int
    counts: np.ndarray = field(repr=False)  # (f, f, n_states, n_symbols) int64
    thresholds: np.ndarray = field(repr=False)  # (f, f) float

    def __post_init__(self):
        f = len(self.names)
        if self.counts.shape[:2] != (f, f):
            raise DataError(f"count grid shape {self.counts.shape} != ({f}, {f}, ...)")
        if self.thresholds.shape != (f, f):
            raise DataError("threshold grid must be f x f")
        if not np.all(np.isfinite(self.thresholds)):
            raise DataError("thresholds must be finite")
        self.counts.setflags(write=False)
        self.thresholds.setflags(write=False)

    @property
    def n_channels(self) -> int:
        return len(self.names)

    @property
    def n_patterns(self) -> int:
        return self.n_channels**2


def pattern_index(a: int, b: int, f: int) -> int:
    """Row-major position of pattern a->b in a length f*f vector."""
    if not (0 <= a < f and 0 <= b < f):
        raise DataError(f"pattern ({a}, {b}) out of range for f={f}")
    return a * f + b


def index_pattern(i: int, f: int) -> tuple[int, int]:
    """Inverse of :func:`pattern_index`."""
    if not 0 <= i < f * f:
        raise DataError(f"pattern index {i} out of range for f={f}")
    return divmod(i, f)


def _symbols_and_states(ts: TimeSeries, partition, depth):
    symbols = symbolize(ts, partition)
    states = states_from_symbols(symbols, partition.alphabet_size, depth)
    return symbols, states


def _count_grid(symbols, states, n_states, n_symbols, lag, depth):
    f = symbols.shape[1]
    grid = np.zeros((f, f, n_states, n_symbols), dtype=np.int64)
    for a in range(f):
        for b in range(f):
            grid[a, b] = count_matrix(
                states[:, a], n_states, symbols[:, b], n_symbols, lag=lag, depth=depth
            )
    return grid


def train_stpn(
    nominal: TimeSeries | Sequence[TimeSeries], config: StpnConfig = StpnConfig()
) -> StpnModel:
    """Fit the pattern network from one or more nominal series.

    With several series (multiple nominal operating modes) the counts are
    pooled into a single grid; disambiguating the modes is the energy
    model's job, not the network's. Thresholds are set per pattern to the
    configured quantile of the log metric over all nominal windows.
    """
    series = [nominal] if isinstance(nominal, TimeSeries) else list(nominal)
    if not series:
        raise DataError("no nominal series given")
    names = series[0].names
    for ts in series:
        if ts.names != names:
            raise DataError("all nominal series must share channel names")
        if ts.n_samples < 2 * config.window_length:
            raise DataError(
                f"nominal series of {ts.n_samples} samples shorter than "
                f"2 x window_length = {2 * config.window_length}"
            )
    pooled = TimeSeries(names, np.vstack([ts.values for ts in series]))
    partition = learn_partition(pooled, config.alphabet_size, config.partition_method)
    n_symbols = config.alphabet_size
    n_states = n_symbols**config.depth

    f = len(names)
    counts = np.zeros((f, f, n_states, n_symbols), dtype=np.int64)
    per_series = []
    for ts in series:
        symbols, states = _symbols_and_states(ts, partition, config.depth)
        per_series.append((symbols, states))
        counts += _count_grid(symbols, states, n_states, n_symbols, config.lag, config.depth)

    model = StpnModel(
        names=names,
        partition=partition,
        depth=config.depth,
        lag=config.lag,
        window_length=config.window_length,
        counts=counts,
        thresholds=np.zeros((f, f)),
    )

    stride = config.stride or config.window_length
    window_values = []  # -> (n_windows, f, f)
    for (symbols, states), ts in zip(per_series, series):
        for start in range(0, ts.n_samples - config.window_length + 1, stride):
            window_values.append(
                _metrics_from_symbols(
                    model,
                    symbols[start : start + config.window_length],
                    states_from_symbols(
                        symbols[start : start + config.window_length],
                        n_symbols,
                        config.depth,
                    ),
                )
            )
    if not window_values:
        raise DataError("nominal data yields no calibration windows")
    if len(window_values) * config.threshold_quantile < 1.0:
        warnings.warn(
            f"calibrating the {config.threshold_quantile} threshold quantile on "
            f"only {len(window_values)} nominal windows; thresholds degenerate "
            "to training minima, so provide more nominal data for stable bits"
        )
    stacked = np.stack(window_values)
    thresholds = np.quantile(stacked, config.threshold_quantile, axis=0)
    return replace(model, thresholds=thresholds)


def _metrics_from_symbols(model: StpnModel, symbols, states) -> np.ndarray:
    f = model.n_channels
    n_symbols = model.partition.alphabet_size
    n_states = n_symbols**model.depth
    grid = _count_grid(symbols, states, n_states, n_symbols, model.lag, model.depth)
    out = np.empty((f, f))
    for a in range(f):
        for b in range(f):
            out[a, b] = log_inference_metric(model.counts[a, b], grid[a, b])
    return out


def window_metrics(model: StpnModel, window: TimeSeries) -> np.ndarray:
    """Log inference metric of one window for every pattern; shape (f, f)."""
    if window.n_samples != model.window_length:
        raise DataError(
            f"window of {window.n_samples} samples, model expects {model.window_length}"
        )
    if window.names != model.names:
        raise DataError("window channels do not match the model")
    symbols, states = _symbols_and_states(window, model.partition, model.depth)
    return _metrics_from_symbols(model, symbols, states)


def binarize(metrics: np.ndarray, model: StpnModel) -> np.ndarray:
    """Threshold a metric grid into a flat 0/1 pattern vector of length f*f.

    A metric exactly at its threshold maps to 1 (inclusive rule).
    """
    metrics = np.asarray(metrics, dtype=float)
    if metrics.shape != model.thresholds.shape:
        raise DataError(
            f"metric grid {metrics.shape} does not match model {model.thresholds.shape}"
        )
    return (metrics >= model.thresholds).astype(np.int8).ravel()


@dataclass(frozen=True, eq=False)
class WindowScan:
    """Per-window metrics and pattern vectors for one series."""

    starts: np.ndarray  # (n,) int
    metrics: np.ndarray  # (n, f, f) float
    vectors: np.ndarray  # (n, f*f) int8


def scan_windows(
    model: StpnModel, ts: TimeSeries, stride: int | None = None
) -> WindowScan:
    """Slide the model's window over a series and binarize every position."""
    if ts.n_samples < model.window_length:
        raise DataError(
            f"series of {ts.n_samples} samples shorter than window "
            f"length {model.window_length}"
        )
    stride = stride or model.window_length
    starts, metrics, vectors = [], [], []
    symbols, _ = _symbols_and_states(ts, model.partition, model.depth)
    n_symbols = model.partition.alphabet_size
    for start in range(0, ts.n_samples - model.window_length + 1, stride):
        chunk = symbols[start : start + model.window_length]
        m = _metrics_from_symbols(
            model, chunk, states_from_symbols(chunk, n_symbols, model.depth)
        )
        starts.append(start)
        metrics.append(m)
        vectors.append((m >= model.thresholds).astype(np.int8).ravel())
    return WindowScan(
        starts=np.array(starts, dtype=np.int64),
        metrics=np.stack(metrics),
        vectors=np.stack(vectors),
    )
