"""Binary restricted Boltzmann machine over pattern vectors.

Trained with single-step contrastive divergence on nominal pattern vectors,
the machine assigns low free energy to configurations it has seen and high
free energy to everything else; the free-energy threshold calibrated on the
training vectors is the anomaly detector.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, NumericalError


@dataclass(frozen=True, eq=False)
class RbmParams:
    """Visible biases, hidden biases, and the weight matrix."""

    visible_bias: np.ndarray = field(repr=False)  # (n_v,)
    hidden_bias: np.ndarray = field(repr=False)  # (n_h,)
    weights: np.ndarray = field(repr=False)  # (n_v, n_h)

    def __post_init__(self):
        a = np.asarray(self.visible_bias, dtype=float)
        b = np.asarray(self.hidden_bias, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (a.size, b.size):
            raise DataError(
                f"weights {w.shape} inconsistent with biases ({a.size}, {b.size})"
            )
        for arr in (a, b, w):
            if not np.all(np.isfinite(arr)):
                raise DataError("parameters must be finite")
        object.__setattr__(self, "visible_bias", a)
        object.__setattr__(self, "hidden_bias", b)
        object.__setattr__(self, "weights", w)

    @property
    def n_visible(self) -> int:
        return self.visible_bias.size

    @property
    def n_hidden(self) -> int:
        return self.hidden_bias.size


@dataclass(frozen=True)
class RbmConfig:
    n_hidden: int = 64
    epochs: int = 200
    learning_rate: float = 0.05
    batch_size: int = 32
    seed: int = 0


def _sigmoid(x):
    out = np.empty_like(x, dtype=float)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def train_rbm(vectors: np.ndarray, config: RbmConfig = RbmConfig()) -> RbmParams:
    """Fit the machine to binary vectors with CD-1; deterministic per seed."""
    vectors = np.asarray(vectors, dtype=float)
    if vectors.ndim != 2 or vectors.shape[0] == 0:
        raise DataError("training set must be a nonempty (n, n_v) matrix")
    if config.n_hidden < 1:
        raise DataError("n_hidden must be >= 1")
    n, n_v = vectors.shape
    rng = np.random.default_rng(config.seed)
    w = rng.normal(0.0, 0.01, size=(n_v, config.n_hidden))
    a = np.zeros(n_v)
    b = np.zeros(config.n_hidden)
    lr = config.learning_rate

    for _ in range(config.epochs):
        order = rng.permutation(n)
        for lo in range(0, n, config.batch_size):
            v0 = vectors[order[lo : lo + config.batch_size]]
            m = v0.shape[0]
            ph0 = _sigmoid(v0 @ w + b)
            h0 = (rng.random(ph0.shape) < ph0).astype(float)
            pv1 = _sigmoid(h0 @ w.T + a)
            v1 = (rng.random(pv1.shape) < pv1).astype(float)
            ph1 = _sigmoid(v1 @ w + b)
            w += lr * (v0.T @ ph0 - v1.T @ ph1) / m
            a += lr * (v0 - v1).mean(axis=0)
            b += lr * (ph0 - ph1).mean(axis=0)
    return RbmParams(visible_bias=a, hidden_bias=b, weights=w)


def free_energy(params: RbmParams, v: np.ndarray) -> float | np.ndarray:
    """Free energy of one vector or a batch of row vectors.

    F(v) = -sum_i v_i a_i - sum_j softplus(b_j + sum_i v_i W_ij), with the
    softplus evaluated overflow-safely.
    """
    v = np.asarray(v, dtype=float)
    single = v.ndim == 1
    rows = v[None, :] if single else v
    if rows.shape[1] != params.n_visible:
        raise DataError(
            f"vector length {rows.shape[1]} != n_visible {params.n_visible}"
        )
    act = rows @ params.weights + params.hidden_bias
    f = -rows @ params.visible_bias - np.logaddexp(0.0, act).sum(axis=1)
    return float(f[0]) if single else f


def switched_free_energy(
    params: RbmParams, v: np.ndarray, flip_set
) -> float:
    """Free energy after flipping the given visible positions of `v`."""
    v = np.asarray(v, dtype=float).copy()
    idx = np.asarray(sorted(set(int(i) for i in flip_set)), dtype=int)
    if idx.size and (idx.min() < 0 or idx.max() >= params.n_visible):
        raise DataError("flip index out of range")
    v[idx] = 1.0 - v[idx]
    return free_energy(params, v)


def calibrate_threshold(
    params: RbmParams, nominal_vectors: np.ndarray, kappa: float = 1.0
) -> float:
    """Detection threshold: max nominal free energy plus kappa sigma margin."""
    f = free_energy(params, np.asarray(nominal_vectors, dtype=float))
    f = np.atleast_1d(f)
    if f.size == 0:
        raise DataError("need at least one nominal vector to calibrate")
    return float(np.max(f) + kappa * np.std(f))


@dataclass(frozen=True)
class DetectorConfig:
    """Free-energy cutoff plus the window-aggregation rule."""

    energy_threshold: float
    aggregation: str = "single"  # "single" or "mean"
    mean_window: int = 1

    def __post_init__(self):
        if not np.isfinite(self.energy_threshold):
            raise DataError("energy_threshold must be finite")
        if self.aggregation not in ("single", "mean"):
            raise DataError("aggregation must be 'single' or 'mean'")
        if self.mean_window < 1:
            raise DataError("mean_window must be >= 1")


def detect(params: RbmParams, v: np.ndarray, cfg: DetectorConfig) -> bool:
    """True when the vector is anomalous (free energy above the threshold)."""
    return bool(free_energy(params, v) > cfg.energy_threshold)


def detect_windows(
    params: RbmParams, vectors: np.ndarray, cfg: DetectorConfig
) -> np.ndarray:
    """Verdict per window; "mean" aggregation smooths F over trailing windows."""
    f = np.atleast_1d(free_energy(params, np.asarray(vectors, dtype=float)))
    if cfg.aggregation == "mean" and cfg.mean_window > 1:
        k = cfg.mean_window
        padded = np.concatenate([np.full(k - 1, f[0]), f])
        f = np.convolve(padded, np.full(k, 1.0 / k), mode="valid")
    return f > cfg.energy_threshold


def select_hidden_units(
    vectors: np.ndarray,
    candidates=(16, 32, 64, 128, 256),
    holdout_fraction: float = 0.25,
    config: RbmConfig = RbmConfig(),
) -> int:
    """Pick the hidden-layer width giving the lowest mean held-out free energy.

    Candidate widths follow the reference sweep range 16..256.
    """
    vectors = np.asarray(vectors, dtype=float)
    if vectors.shape[0] < 4:
        raise DataError("need at least 4 vectors for a holdout split")
    rng = np.random.default_rng(config.seed)
    order = rng.permutation(vectors.shape[0])
    n_hold = max(1, int(round(holdout_fraction * vectors.shape[0])))
    hold, train = vectors[order[:n_hold]], vectors[order[n_hold:]]
    best_nh, best_f = None, np.inf
    for nh in candidates:
        params = train_rbm(
            train,
            RbmConfig(
                n_hidden=int(nh),
                epochs=config.epochs,
                learning_rate=config.learning_rate,
                batch_size=config.batch_size,
                seed=config.seed,
            ),
        )
        mean_f = float(np.mean(free_energy(params, hold)))
        if not np.isfinite(mean_f):
            raise NumericalError(f"free energy diverged for n_hidden={nh}")
        if mean_f < best_f:
            best_nh, best_f = int(nh), mean_f
    return best_nh
