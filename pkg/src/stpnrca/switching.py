"""Sequential state switching: greedy pattern-flip search over free energy.

Starting from an anomalous pattern vector, repeatedly flip the single
pattern bit whose flip lowers the free energy the most; the flipped set is
the pattern-level root cause, each member weighted by the relative energy
drop its lone flip produces.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import DataError
from .rbm import RbmParams, free_energy

# Minimum strict decrease for a flip to be accepted; avoids float livelock.
DESCENT_TOL = 1e-9


@dataclass(frozen=True)
class S3Result:
    """Selected pattern indices (in order), their weights, and the F trace."""

    anomalous_patterns: tuple[int, ...]
    weights: tuple[float, ...]
    trace: tuple[float, ...]

    @property
    def final_energy(self) -> float:
        return self.trace[-1]


def _single_flip_energies(params, v, act, visible_term, cand):
    """Free energy after flipping each candidate bit alone on `v`.

    `act` is the hidden pre-activation b + v W and `visible_term` the dot
    product v.a, both maintained incrementally by the caller; one flip only
    shifts them by one weight row, so the sweep costs O(n_cand * n_h)
    rather than a full matrix rebuild.
    """
    sign = 1.0 - 2.0 * v[cand]
    acts = act[None, :] + sign[:, None] * params.weights[cand]
    vis = visible_term + sign * params.visible_bias[cand]
    return -vis - np.logaddexp(0.0, acts).sum(axis=1)


def s3_search(params: RbmParams, v: np.ndarray) -> S3Result:
    """Greedy minimization of free energy by single-bit flips.

    Candidates are the positions whose lone flip lowers F(v); each step
    flips the remaining candidate with the largest decrease (ties to the
    lowest index) until no flip on top of the accumulated set helps.
    Weights come from flipping each selected bit alone on the original
    vector: (F_flipped - F0) / F0, falling back to the absolute difference
    when F0 is (numerically) zero.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size != params.n_visible:
        raise DataError(f"expected a length-{params.n_visible} vector")
    f0 = free_energy(params, v)

    current = v.copy()
    act = params.hidden_bias + current @ params.weights
    visible_term = float(current @ params.visible_bias)
    all_idx = np.arange(v.size)
    single = _single_flip_energies(params, current, act, visible_term, all_idx)
    candidates = [int(i) for i in all_idx[single < f0 - DESCENT_TOL]]

    f_current = f0
    selected: list[int] = []
    trace = [f0]
    while candidates:
        cand = np.asarray(candidates)
        f_cand = _single_flip_energies(params, current, act, visible_term, cand)
        best = int(np.argmin(f_cand))  # argmin takes the lowest index on ties
        if f_cand[best] >= f_current - DESCENT_TOL:
            break
        idx = int(cand[best])
        sign = 1.0 - 2.0 * current[idx]
        act = act + sign * params.weights[idx]
        visible_term += sign * params.visible_bias[idx]
        current[idx] = 1.0 - current[idx]
        f_current = float(f_cand[best])
        selected.append(idx)
        trace.append(f_current)
        candidates.remove(idx)

    if abs(f0) < 1e-12:
        weights = [float(single[i] - f0) for i in selected]
    else:
        weights = [float((single[i] - f0) / f0) for i in selected]
    return S3Result(
        anomalous_patterns=tuple(selected),
        weights=tuple(weights),
        trace=tuple(trace),
    )


def exhaustive_switch_oracle(
    params: RbmParams, v: np.ndarray, max_bits: int = 16
) -> tuple[tuple[int, ...], float]:
    """Globally optimal flip set by brute force over all 2**n_v subsets.

    Ties break toward the smaller subset, then lexicographically. Only
    usable for small vectors; serves as the ground truth the greedy search
    is measured against.
    """
    v = np.asarray(v, dtype=float)
    n = v.size
    if max_bits > 16:
        raise DataError("max_bits capped at 16")
    if n > max_bits:
        raise DataError(f"{n} bits exceeds max_bits={max_bits}")
    best_set: tuple[int, ...] = ()
    best_f = free_energy(params, v)
    for size in range(1, n + 1):
        subsets = list(combinations(range(n), size))
        rows = np.repeat(v[None, :], len(subsets), axis=0)
        for r, subset in enumerate(subsets):
            cols = list(subset)
            rows[r, cols] = 1.0 - rows[r, cols]
        f = free_energy(params, rows)
        k = int(np.argmin(f))
        if f[k] < best_f:  # strict: earlier (smaller, lex-first) subset wins ties
            best_f = float(f[k])
            best_set = subsets[k]
    return best_set, best_f


def kld_distance(
    nominal_samples: np.ndarray, test_samples: np.ndarray, bins: int = 20
) -> float:
    """KL divergence of test free energies from nominal ones.

    Histograms share one binning over the pooled range and get add-one
    smoothing, so disjoint supports stay finite. Useful alongside raw free
    energy when scoring a batch of windows against the nominal population.
    """
    nominal = np.asarray(nominal_samples, dtype=float).ravel()
    test = np.asarray(test_samples, dtype=float).ravel()
    if nominal.size < 2 or test.size < 2:
        raise DataError("need at least 2 samples on each side")
    if bins < 2:
        raise DataError("need at least 2 bins")
    lo = min(nominal.min(), test.min())
    hi = max(nominal.max(), test.max())
    if lo == hi:
        raise DataError("degenerate histograms: all samples identical")
    edges = np.linspace(lo, hi, bins + 1)
    p, _ = np.histogram(test, bins=edges)
    q, _ = np.histogram(nominal, bins=edges)
    p = (p + 1.0) / (p.sum() + bins)
    q = (q + 1.0) / (q.sum() + bins)
    return float(np.sum(p * np.log(p / q)))
