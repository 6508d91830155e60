"""Artificial anomaly association: per-pattern nominal/anomalous classifier.

Training data is manufactured from nominal pattern vectors by flipping small
random bit subsets; the label vector is all ones except at flipped positions.
A feedforward net with rectifier hidden layers and logistic outputs then
solves one binary sub-problem per pattern, so a single forward pass tags
every pattern of a test vector at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import DataError


@dataclass(frozen=True, eq=False)
class A3Dataset:
    """Input pattern vectors with per-position indicator labels (1=nominal)."""

    inputs: np.ndarray = field(repr=False)  # (n, L)
    labels: np.ndarray = field(repr=False)  # (n, L)

    def __post_init__(self):
        inputs = np.asarray(self.inputs, dtype=float)
        labels = np.asarray(self.labels, dtype=float)
        if inputs.shape != labels.shape or inputs.ndim != 2:
            raise DataError("inputs and labels must be matching (n, L) matrices")
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "labels", labels)

    @property
    def n_examples(self) -> int:
        return self.inputs.shape[0]


@dataclass(frozen=True, eq=False)
class MlpParams:
    """Layer weights/biases; hidden layers are ReLU, outputs logistic."""

    weights: tuple[np.ndarray, ...] = field(repr=False)
    biases: tuple[np.ndarray, ...] = field(repr=False)
    dropout: float = 0.0

    @property
    def n_inputs(self) -> int:
        return self.weights[0].shape[0]

    @property
    def n_outputs(self) -> int:
        return self.weights[-1].shape[1]


@dataclass(frozen=True)
class MlpConfig:
    hidden: tuple[int, ...] = (256, 256)
    dropout: float = 0.5
    learning_rate: float = 0.1
    momentum: float = 0.9
    batch_size: int = 128
    epochs: int = 200
    patience: int = 10
    seed: int = 0


def generate_artificial_anomalies(
    nominal_vectors: np.ndarray,
    flip_orders=(1, 2, 3, 4),
    samples_per_order: int = 20,
    seed: int = 0,
    exhaustive: bool = False,
) -> A3Dataset:
    """Build the training set of flipped vectors and indicator labels.

    Every nominal vector contributes its unflipped self (labels all ones)
    plus, per flip order k, perturbed copies with k distinct bits flipped
    and labels zeroed exactly there. `exhaustive` enumerates every k-subset
    once instead of sampling `samples_per_order` of them.
    """
    nominal = np.asarray(nominal_vectors, dtype=float)
    if nominal.ndim != 2 or nominal.shape[0] == 0:
        raise DataError("need a nonempty (n, L) matrix of nominal vectors")
    L = nominal.shape[1]
    orders = sorted(set(int(k) for k in flip_orders))
    if any(k < 1 or k > L for k in orders):
        raise DataError(f"flip orders must lie in 1..{L}")
    rng = np.random.default_rng(seed)
    inputs, labels = [], []
    for v in nominal:
        inputs.append(v.copy())
        labels.append(np.ones(L))
        for k in orders:
            if exhaustive:
                subsets = combinations(range(L), k)
            else:
                subsets = (
                    rng.choice(L, size=k, replace=False)
                    for _ in range(samples_per_order)
                )
            for subset in subsets:
                idx = np.asarray(list(subset), dtype=int)
                x = v.copy()
                x[idx] = 1.0 - x[idx]
                y = np.ones(L)
                y[idx] = 0.0
                inputs.append(x)
                labels.append(y)
    return A3Dataset(np.stack(inputs), np.stack(labels))


def init_mlp(n_inputs: int, n_outputs: int, config: MlpConfig) -> MlpParams:
    """Scaled random initialization (deterministic per seed)."""
    rng = np.random.default_rng(config.seed)
    sizes = [n_inputs, *config.hidden, n_outputs]
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpParams(tuple(weights), tuple(biases), dropout=config.dropout)


def _forward(weights, biases, x, dropout=0.0, rng=None):
    """Hidden activations and output logits; inverted dropout when training."""
    h = x
    hiddens, masks = [], []
    for w, b in zip(weights[:-1], biases[:-1]):
        h = np.maximum(h @ w + b, 0.0)
        if dropout > 0.0 and rng is not None:
            mask = (rng.random(h.shape) >= dropout) / (1.0 - dropout)
            h = h * mask
            masks.append(mask)
        else:
            masks.append(None)
        hiddens.append(h)
    logits = h @ weights[-1] + biases[-1]
    return hiddens, masks, logits


def _bce_with_logits(logits, y):
    # max(z,0) - z*y + log1p(exp(-|z|)), summed per label then meaned
    per_cell = np.maximum(logits, 0.0) - logits * y + np.log1p(np.exp(-np.abs(logits)))
    return per_cell


def a3_loss(params: MlpParams, inputs, labels, per_position: bool = False):
    """Mean over examples of the per-label logistic loss (dropout off).

    With `per_position` the f*f individual sub-problem losses are returned;
    their sum equals the scalar total.
    """
    x = np.asarray(inputs, dtype=float)
    y = np.asarray(labels, dtype=float)
    _, _, logits = _forward(params.weights, params.biases, x)
    cells = _bce_with_logits(logits, y).mean(axis=0)
    return cells if per_position else float(cells.sum())


def loss_and_grads(weights, biases, x, y, dropout=0.0, rng=None):
    """Loss plus analytic gradients for one batch."""
    hiddens, masks, logits = _forward(weights, biases, x, dropout, rng)
    n = x.shape[0]
    loss = float(_bce_with_logits(logits, y).sum() / n)
    delta = (_sigmoid(logits) - y) / n
    grads_w, grads_b = [None] * len(weights), [None] * len(weights)
    acts = [x, *hiddens]
    for layer in range(len(weights) - 1, -1, -1):
        grads_w[layer] = acts[layer].T @ delta
        grads_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = delta @ weights[layer].T
            if masks[layer - 1] is not None:
                delta = delta * masks[layer - 1]
            delta = delta * (hiddens[layer - 1] > 0.0)
    return loss, grads_w, grads_b


def _sigmoid(x):
    out = np.empty_like(x, dtype=float)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def train_a3(data: A3Dataset, config: MlpConfig = MlpConfig()) -> MlpParams:
    """Train with mini-batch gradient descent plus momentum and early stopping.

    The dataset is shuffled (by seed) and split into equal training and
    validation halves; training stops when validation loss has not improved
    for `patience` epochs and the best-validation-epoch parameters are
    returned, not the last ones.
    """
    if data.n_examples < 2:
        raise DataError("need at least 2 examples to split train/validation")
    rng = np.random.default_rng(config.seed)
    order = rng.permutation(data.n_examples)
    half = data.n_examples // 2
    tr_x, tr_y = data.inputs[order[:half]], data.labels[order[:half]]
    va_x, va_y = data.inputs[order[half:]], data.labels[order[half:]]

    init = init_mlp(data.inputs.shape[1], data.labels.shape[1], config)
    weights = [w.copy() for w in init.weights]
    biases = [b.copy() for b in init.biases]
    vel_w = [np.zeros_like(w) for w in weights]
    vel_b = [np.zeros_like(b) for b in biases]

    def val_loss():
        _, _, logits = _forward(weights, biases, va_x)
        return float(_bce_with_logits(logits, va_y).sum() / va_x.shape[0])

    best = val_loss()
    best_w = [w.copy() for w in weights]
    best_b = [b.copy() for b in biases]
    stale = 0
    for _ in range(config.epochs):
        idx = rng.permutation(tr_x.shape[0])
        for lo in range(0, tr_x.shape[0], config.batch_size):
            batch = idx[lo : lo + config.batch_size]
            _, gw, gb = loss_and_grads(
                weights, biases, tr_x[batch], tr_y[batch], config.dropout, rng
            )
            for layer in range(len(weights)):
                vel_w[layer] = config.momentum * vel_w[layer] - config.learning_rate * gw[layer]
                vel_b[layer] = config.momentum * vel_b[layer] - config.learning_rate * gb[layer]
                weights[layer] += vel_w[layer]
                biases[layer] += vel_b[layer]
        current = val_loss()
        if current < best - 1e-12:
            best = current
            best_w = [w.copy() for w in weights]
            best_b = [b.copy() for b in biases]
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                break
    return MlpParams(tuple(best_w), tuple(best_b), dropout=config.dropout)


def infer_a3(
    params: MlpParams, v: np.ndarray, cutoff: float = 0.5
) -> tuple[np.ndarray, np.ndarray]:
    """Indicator and probability vectors for one input (dropout disabled).

    Positions whose nominal probability falls below the cutoff carry
    indicator 0 (anomalous); their anomaly weight for node inference is
    1 - probability.
    """
    if not 0.0 < cutoff < 1.0:
        raise DataError("cutoff must lie in (0, 1)")
    v = np.asarray(v, dtype=float)
    single = v.ndim == 1
    rows = v[None, :] if single else v
    if rows.shape[1] != params.n_inputs:
        raise DataError(f"input length {rows.shape[1]} != {params.n_inputs}")
    _, _, logits = _forward(params.weights, params.biases, rows)
    probs = _sigmoid(logits)
    indicator = (probs >= cutoff).astype(np.int8)
    if single:
        return indicator[0], probs[0]
    return indicator, probs
