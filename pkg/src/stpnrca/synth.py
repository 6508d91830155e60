"""Synthetic benchmark: autoregressive simulation, faults, and a VAR baseline.

A causal graph is a lag-indexed coefficient tensor driving a vector
autoregression with Gaussian white noise. Six built-in 5-node graphs serve
as nominal operating modes; faults either break specific edges (re-simulate
with those coefficients zeroed) or delay one channel's readings, which
severs most observed causality to and from that channel. Ordinary least
squares fits recover coefficient tensors from data, and differencing the
nominal and anomalous fits yields the baseline root-cause method.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, NumericalError
from .stpn import pattern_index
from .timeseries import TimeSeries

# Documented coefficient table for the built-in 5-node modes. Every channel
# keeps memory of itself at SELF_COEFF. The five BREAKABLE_EDGES (the fault
# suite's targets, forming the cycle 1->2->5->1 plus the chain 2->3->4) are
# present in every mode at BREAKABLE_COEFF, so their loss is abnormal in all
# modes. Each channel also has a persistent second input at SUPPORT_COEFF,
# except in one "lean" mode per channel, which keeps the post-break marginal
# of a channel inside the nominal envelope; one extra edge per mode (same
# coefficient) adds a "rich" variant. Modes therefore share the breakable
# backbone but differ in their support edges, which is what lets a broken
# pattern be localized without flagging its collateral.
SELF_COEFF = 0.45
BREAKABLE_COEFF = 0.2
SUPPORT_COEFF = 0.25
CROSS_COEFF = SUPPORT_COEFF  # default for random graphs
NOISE_STD = 0.1

BREAKABLE_EDGES: tuple[tuple[int, int], ...] = (
    (0, 1), (1, 4), (4, 0), (1, 2), (2, 3),
)
SUPPORT_EDGES: tuple[tuple[int, int], ...] = (
    (3, 1), (3, 4), (2, 0), (4, 2), (0, 3),
)
# Per mode: the support edge it drops and the extra edge it adds. Mode 1 is
# the base graph; mode 3's extra 3->2 closes the 2-cycle 2->3->2, and the
# persistent 1->2->3->1 cycle comes from breakable (0,1), (1,2) plus support
# (2,0).
MODE_DROPPED: tuple[tuple[tuple[int, int], ...], ...] = (
    (), ((3, 1),), ((3, 4),), ((2, 0),), ((4, 2),), ((0, 3),),
)
MODE_EXTRAS: tuple[tuple[tuple[int, int], ...], ...] = (
    (), ((1, 3),), ((2, 1),), ((4, 3),), ((0, 4),), ((1, 0),),
)


@dataclass(frozen=True, eq=False)
class CausalGraph:
    """Lagged coefficient tensor (p, f, f) plus per-channel noise levels.

    ``coeffs[k, i, j]`` is the influence of channel j on channel i at lag
    k+1. The companion-matrix spectral radius must stay below 1.
    """

    coeffs: np.ndarray = field(repr=False)
    noise_std: np.ndarray = field(repr=False)
    names: tuple[str, ...] = ()

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=float)
        if coeffs.ndim != 3 or coeffs.shape[1] != coeffs.shape[2]:
            raise DataError(f"coeffs must be (p, f, f), got {coeffs.shape}")
        noise = np.asarray(self.noise_std, dtype=float)
        if noise.shape != (coeffs.shape[1],):
            raise DataError("noise_std must have one entry per channel")
        if np.any(noise <= 0):
            raise DataError("noise_std must be positive")
        names = self.names or tuple(f"x{i + 1}" for i in range(coeffs.shape[1]))
        if len(names) != coeffs.shape[1]:
            raise DataError("names length must equal channel count")
        coeffs.setflags(write=False)
        noise.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "noise_std", noise)
        object.__setattr__(self, "names", tuple(names))
        radius = self.spectral_radius()
        if radius >= 1.0:
            raise DataError(f"unstable graph: companion spectral radius {radius:.3f}")

    @property
    def n_channels(self) -> int:
        return self.coeffs.shape[1]

    @property
    def n_lags(self) -> int:
        return self.coeffs.shape[0]

    def spectral_radius(self) -> float:
        p, f, _ = self.coeffs.shape
        companion = np.zeros((p * f, p * f))
        companion[:f] = self.coeffs.transpose(1, 0, 2).reshape(f, p * f)
        if p > 1:
            companion[f:, : (p - 1) * f] = np.eye((p - 1) * f)
        return float(np.max(np.abs(np.linalg.eigvals(companion))))

    def edges(self) -> tuple[tuple[int, int], ...]:
        """(source, target) pairs with a nonzero coefficient at any lag."""
        nonzero = np.any(self.coeffs != 0.0, axis=0)
        return tuple(
            (j, i) for i in range(self.n_channels) for j in range(self.n_channels)
            if nonzero[i, j]
        )


@dataclass(frozen=True)
class FaultSpec:
    """Either break listed edges or delay one channel's readings."""

    kind: str  # "pattern_break" or "node_delay"
    edges: tuple[tuple[int, int], ...] = ()
    node: int = -1
    delay: int = 0

    def __post_init__(self):
        if self.kind == "pattern_break":
            if not self.edges:
                raise DataError("pattern_break needs at least one edge")
        elif self.kind == "node_delay":
            if self.node < 0:
                raise DataError("node_delay needs a node index")
            if self.delay < 1:
                raise DataError("delay must be >= 1")
        else:
            raise DataError(f"unknown fault kind {self.kind!r}")


def simulate_var(g: CausalGraph, T: int, seed: int = 0) -> TimeSeries:
    """Draw T samples from the autoregression after a 10*p burn-in.

    Noise is zero-mean Gaussian per channel; the initial state is zero and
    the first 10*p samples are discarded. Deterministic per seed.
    """
    p = g.n_lags
    if T < 10 * p:
        raise DataError(f"T={T} shorter than 10*p={10 * p}")
    rng = np.random.default_rng(seed)
    burn = 10 * p
    f = g.n_channels
    total = T + burn
    y = np.zeros((total + p, f))
    noise = rng.normal(0.0, 1.0, size=(total, f)) * g.noise_std
    for t in range(total):
        acc = noise[t].copy()
        for k in range(p):
            acc += g.coeffs[k] @ y[p + t - 1 - k]
        y[p + t] = acc
    return TimeSeries(g.names, y[p + burn :].copy())


def _stabilized(coeffs: np.ndarray, noise: np.ndarray, names=()) -> CausalGraph:
    """Uniformly scale coefficients down until the graph is stationary."""
    coeffs = np.asarray(coeffs, dtype=float)
    for _ in range(60):
        try:
            return CausalGraph(coeffs, noise, names)
        except DataError:
            coeffs = coeffs * 0.9
    raise NumericalError("could not stabilize the coefficient tensor")


def builtin_modes() -> tuple[CausalGraph, ...]:
    """The six 5-node nominal operating modes (documented constants above)."""
    modes = []
    for dropped, extras in zip(MODE_DROPPED, MODE_EXTRAS):
        coeffs = np.zeros((1, 5, 5))
        coeffs[0, np.arange(5), np.arange(5)] = SELF_COEFF
        for src, dst in BREAKABLE_EDGES:
            coeffs[0, dst, src] = BREAKABLE_COEFF
        for src, dst in SUPPORT_EDGES:
            if (src, dst) not in dropped:
                coeffs[0, dst, src] = SUPPORT_COEFF
        for src, dst in extras:
            coeffs[0, dst, src] = SUPPORT_COEFF
        modes.append(_stabilized(coeffs, np.full(5, NOISE_STD)))
    return tuple(modes)


def random_graph(
    n_nodes: int,
    n_edges: int | None = None,
    seed: int = 0,
    cross_coeff: float = CROSS_COEFF,
    self_coeff: float = SELF_COEFF,
    noise_std: float | tuple[float, float] = NOISE_STD,
) -> CausalGraph:
    """Seeded random stationary graph for scaled-up node-fault benchmarks.

    `noise_std` may be a (low, high) pair, in which case per-channel noise
    levels are drawn log-uniformly from that range — heterogeneous scales
    are what make larger systems hard for coefficient-difference baselines.
    """
    if n_nodes < 2:
        raise DataError("need at least 2 nodes")
    rng = np.random.default_rng(seed)
    n_edges = n_edges if n_edges is not None else n_nodes
    pairs = [(i, j) for i in range(n_nodes) for j in range(n_nodes) if i != j]
    chosen = rng.choice(len(pairs), size=min(n_edges, len(pairs)), replace=False)
    coeffs = np.zeros((1, n_nodes, n_nodes))
    coeffs[0, np.arange(n_nodes), np.arange(n_nodes)] = self_coeff
    for c in chosen:
        src, dst = pairs[c]
        coeffs[0, dst, src] = cross_coeff
    if isinstance(noise_std, tuple):
        lo, hi = noise_std
        noise = np.exp(rng.uniform(np.log(lo), np.log(hi), size=n_nodes))
    else:
        noise = np.full(n_nodes, float(noise_std))
    return _stabilized(coeffs, noise)


def inject_fault(
    g: CausalGraph, ts: TimeSeries, spec: FaultSpec, seed: int = 0
) -> TimeSeries:
    """Produce an anomalous series according to the fault spec.

    Breaking patterns re-simulates the graph with the listed coefficients
    zeroed (same length as `ts`, fresh seed); delaying a node shifts that
    channel's readings by `delay` samples, holding the initial value over
    the first `delay` positions.
    """
    if spec.kind == "pattern_break":
        existing = set(g.edges())
        for src, dst in spec.edges:
            if (src, dst) not in existing:
                raise DataError(f"edge {src}->{dst} not present in the graph")
        coeffs = g.coeffs.copy()
        for src, dst in spec.edges:
            coeffs[:, dst, src] = 0.0
        broken = CausalGraph(coeffs, g.noise_std, g.names)
        return simulate_var(broken, ts.n_samples, seed=seed)
    if spec.node >= ts.n_channels:
        raise DataError(f"node {spec.node} out of range for f={ts.n_channels}")
    if spec.delay >= ts.n_samples:
        raise DataError("delay longer than the series")
    values = ts.values.copy()
    col = values[:, spec.node].copy()
    values[spec.delay :, spec.node] = col[: -spec.delay]
    values[: spec.delay, spec.node] = col[0]
    return TimeSeries(ts.names, values)


def pattern_fault_cases(
    breakable: tuple[tuple[int, int], ...] | None = None,
) -> tuple[tuple[tuple[int, int], ...], ...]:
    """The 30-case suite: all 1..4-edge subsets of five breakable edges."""
    from itertools import combinations

    edges = breakable if breakable is not None else BREAKABLE_EDGES
    if len(edges) != 5:
        raise DataError("the 30-case suite needs exactly 5 breakable edges")
    cases = []
    for size in (1, 2, 3, 4):
        cases.extend(combinations(edges, size))
    return tuple(tuple(c) for c in cases)


def var_fit(ts: TimeSeries, p: int = 1) -> np.ndarray:
    """Least-squares coefficient recovery; returns a (p, f, f) tensor."""
    if p < 1:
        raise DataError("lag order must be >= 1")
    T, f = ts.values.shape
    if T < 10 * f * p:
        raise DataError(f"need T >= 10*f*p = {10 * f * p}, got {T}")
    y = ts.values
    Y = y[p:]
    X = np.hstack([y[p - k - 1 : T - k - 1] for k in range(p)])
    B, _, rank, _ = np.linalg.lstsq(X, Y, rcond=None)
    if rank < f * p:
        raise NumericalError(f"rank-deficient regressor matrix (rank {rank} < {f * p})")
    coeffs = np.empty((p, f, f))
    for k in range(p):
        coeffs[k] = B[k * f : (k + 1) * f].T
    return coeffs


def var_rca_baseline(
    a_nom: np.ndarray, a_ano: np.ndarray, eta: float = 0.4
) -> list[int]:
    """Failed patterns from coefficient differences between two fits.

    A pattern j->i fails when its coefficient change exceeds `eta` times the
    largest change (max over lags when p > 1). All-zero differences yield an
    empty list with a warning.
    """
    a_nom = np.atleast_3d(np.asarray(a_nom, dtype=float))
    a_ano = np.atleast_3d(np.asarray(a_ano, dtype=float))
    if a_nom.shape != a_ano.shape:
        raise DataError("coefficient tensors must share a shape")
    delta = np.max(np.abs(a_ano - a_nom), axis=0)
    peak = float(delta.max())
    if peak == 0.0:
        warnings.warn("identical coefficient tensors: threshold undefined")
        return []
    f = delta.shape[0]
    failed = [
        pattern_index(j, i, f)
        for i in range(f)
        for j in range(f)
        if delta[i, j] > eta * peak
    ]
    return sorted(failed)


def case_labels(
    case_id: str,
    mode: int,
    spec: FaultSpec | None,
    names: tuple[str, ...],
    seed: int,
) -> dict:
    """Machine-readable ground truth emitted beside each simulated CSV."""
    f = len(names)
    labels: dict = {
        "case_id": case_id,
        "mode": mode,
        "channels": list(names),
        "seed": seed,
        "fault": None,
        "failed_patterns": [],
        "failed_nodes": [],
    }
    if spec is None:
        return labels
    if spec.kind == "pattern_break":
        labels["fault"] = {"kind": "pattern_break", "edges": [list(e) for e in spec.edges]}
        labels["failed_patterns"] = [
            pattern_index(src, dst, f) for src, dst in spec.edges
        ]
        labels["failed_nodes"] = sorted({n for e in spec.edges for n in e})
    else:
        labels["fault"] = {"kind": "node_delay", "node": spec.node, "delay": spec.delay}
        labels["failed_nodes"] = [spec.node]
    return labels
