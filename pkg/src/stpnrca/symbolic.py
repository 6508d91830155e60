"""Symbolization of time series and the pattern inference metric.

Channels are discretized into symbols (equal-frequency or equal-width bins),
symbols are grouped into depth-D states, and state->symbol co-occurrence
counts summarize each directed channel pair. The log inference metric scores
how consistent a short window's counts are with the counts learned from
nominal data; its drop under an anomaly is the quantity every downstream
root-cause step consumes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import DataError, DegeneratePartitionError
from .timeseries import TimeSeries


@dataclass(frozen=True)
class PartitionScheme:
    """Per-channel ordered interior bin edges for a common alphabet size."""

    edges: tuple[np.ndarray, ...]
    alphabet_size: int

    def __post_init__(self):
        if self.alphabet_size < 2:
            raise DataError("alphabet_size must be >= 2")
        frozen = []
        for i, e in enumerate(self.edges):
            e = np.asarray(e, dtype=float)
            if e.shape != (self.alphabet_size - 1,):
                raise DataError(
                    f"channel {i}: expected {self.alphabet_size - 1} interior edges, "
                    f"got {e.shape}"
                )
            if e.size > 1 and not np.all(np.diff(e) > 0):
                raise DegeneratePartitionError(
                    f"channel {i}: bin edges are not strictly increasing"
                )
            e.setflags(write=False)
            frozen.append(e)
        object.__setattr__(self, "edges", tuple(frozen))

    @property
    def n_channels(self) -> int:
        return len(self.edges)


def learn_partition(
    ts: TimeSeries, alphabet_size: int, method: str = "mep"
) -> PartitionScheme:
    """Learn per-channel bin edges from training data.

    ``mep`` places edges at empirical quantiles (equal-frequency bins,
    maximizing symbol entropy); ``up`` uses equal-width bins over the
    observed range. Constant channels are rejected: their partition is
    undefined and the caller must exclude or dither them.
    """
    if alphabet_size < 2:
        raise DataError("alphabet_size must be >= 2")
    if ts.n_samples < alphabet_size:
        raise DataError(
            f"need at least {alphabet_size} samples to fit {alphabet_size} bins"
        )
    method = method.lower()
    if method not in ("mep", "up"):
        raise DataError(f"unknown partition method {method!r} (use 'mep' or 'up')")
    edges = []
    for i in range(ts.n_channels):
        x = ts.channel(i)
        lo, hi = float(np.min(x)), float(np.max(x))
        if lo == hi:
            raise DegeneratePartitionError(
                f"channel {ts.names[i]!r} is constant; partition undefined"
            )
        if method == "mep":
            qs = np.arange(1, alphabet_size) / alphabet_size
            e = np.quantile(x, qs)
        else:
            e = lo + (hi - lo) * np.arange(1, alphabet_size) / alphabet_size
        if e.size > 1 and not np.all(np.diff(e) > 0):
            raise DegeneratePartitionError(
                f"channel {ts.names[i]!r}: duplicated bin edges "
                "(too many tied samples for equal-frequency binning)"
            )
        edges.append(e)
    return PartitionScheme(tuple(edges), alphabet_size)


def symbolize(ts: TimeSeries, scheme: PartitionScheme) -> np.ndarray:
    """Map a (T, f) series to a (T, f) int matrix of symbols.

    Symbol k is assigned to values inside bin k; a value exactly on an edge
    goes to the higher bin.
    """
    if scheme.n_channels != ts.n_channels:
        raise DataError(
            f"partition has {scheme.n_channels} channels, series has {ts.n_channels}"
        )
    out = np.empty((ts.n_samples, ts.n_channels), dtype=np.int64)
    for i in range(ts.n_channels):
        out[:, i] = np.searchsorted(scheme.edges[i], ts.channel(i), side="right")
    return out


def states_from_symbols(symbols: np.ndarray, n_symbols: int, depth: int) -> np.ndarray:
    """Encode length-D symbol histories as integer states.

    Output row k corresponds to input rows k..k+D-1 with the oldest symbol
    most significant, so for D=1 states equal symbols. Shape (T-D+1, f).
    """
    symbols = np.asarray(symbols)
    if depth < 1:
        raise DataError("depth must be >= 1")
    T = symbols.shape[0]
    if T < depth:
        raise DataError(f"sequence of length {T} shorter than depth {depth}")
    if symbols.ndim == 1:
        symbols = symbols[:, None]
    states = np.zeros((T - depth + 1, symbols.shape[1]), dtype=np.int64)
    for j in range(depth):
        states = states * n_symbols + symbols[j : T - depth + 1 + j]
    return states


def decode_state(state: int, n_symbols: int, depth: int) -> tuple[int, ...]:
    """Invert the positional state encoding back to its D symbols."""
    out = []
    for _ in range(depth):
        out.append(state % n_symbols)
        state //= n_symbols
    return tuple(reversed(out))


def count_matrix(
    states_a: np.ndarray,
    n_states: int,
    symbols_b: np.ndarray,
    n_symbols: int,
    lag: int = 1,
    depth: int = 1,
) -> np.ndarray:
    """Count state->symbol pairs (Q_a(k), S_b(k+lag)) over all valid k.

    `states_a` indexes times depth-1 .. T-1 (length T-depth+1), `symbols_b`
    indexes times 0 .. T-1 (length T). Returns an (n_states, n_symbols)
    integer matrix.
    """
    states_a = np.asarray(states_a).ravel()
    symbols_b = np.asarray(symbols_b).ravel()
    if lag < 1:
        raise DataError("lag must be >= 1")
    T = symbols_b.shape[0]
    if states_a.shape[0] != T - depth + 1:
        raise DataError(
            f"state sequence length {states_a.shape[0]} inconsistent with "
            f"T={T}, depth={depth}"
        )
    n_pairs = T - depth + 1 - lag
    if n_pairs < 1:
        raise DataError(f"no valid pairs after lag shift (T={T}, D={depth}, p={lag})")
    src = states_a[:n_pairs]
    dst = symbols_b[depth - 1 + lag :]
    flat = src * n_symbols + dst
    counts = np.bincount(flat, minlength=n_states * n_symbols)
    return counts.reshape(n_states, n_symbols)


def log_inference_metric(model: np.ndarray, window: np.ndarray) -> float:
    """Log of the pattern inference metric, up to an additive constant.

    `model` holds counts from the modeling phase, `window` the counts of a
    short subsequence. The normalizing constant is dropped, so only
    differences and orderings of returned values are meaningful. Evaluated
    with log-Gamma throughout; an all-zero window returns exactly 0.
    """
    model = np.asarray(model, dtype=float)
    window = np.asarray(window, dtype=float)
    if model.shape != window.shape:
        raise DataError(f"shape mismatch: model {model.shape}, window {window.shape}")
    if np.any(model < 0) or np.any(window < 0):
        raise DataError("count matrices must be nonnegative")
    n_sym = model.shape[1]
    model_rows = model.sum(axis=1)
    window_rows = window.sum(axis=1)
    row_terms = (
        gammaln(window_rows + 1.0)
        + gammaln(model_rows + n_sym)
        - gammaln(window_rows + model_rows + n_sym)
    )
    cell_terms = (
        gammaln(window + model + 1.0) - gammaln(window + 1.0) - gammaln(model + 1.0)
    )
    return float(np.sum(row_terms) + np.sum(cell_terms))


def metric_delta(lnl_nom: float, lnl_ano: float) -> float:
    """Drop in the log metric caused by an anomaly (nominal minus anomalous)."""
    return float(lnl_nom) - float(lnl_ano)
