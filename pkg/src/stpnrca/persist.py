"""Versioned JSON persistence for trained models.

Every file is a self-describing container with a format tag, a version, and
a kind; loading anything with an unexpected tag, version, or kind fails
loudly. JSON serializes floats via repr, so save/load round-trips are exact
and training with a fixed seed yields byte-identical files.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from .association import MlpParams
from .errors import DataError
from .rbm import RbmParams
from .stpn import StpnModel
from .symbolic import PartitionScheme

FORMAT_TAG = "stpnrca-model"
FORMAT_VERSION = 1


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump(kind: str, payload: dict, path: str) -> None:
    doc = {"format": FORMAT_TAG, "version": FORMAT_VERSION, "kind": kind, "payload": payload}
    _atomic_write(path, json.dumps(doc, sort_keys=True, separators=(",", ":")))


def _load(kind: str, path: str) -> dict:
    if not os.path.exists(path):
        raise DataError(f"no such model file: {path}")
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: not a model container ({exc})") from None
    if doc.get("format") != FORMAT_TAG:
        raise DataError(f"{path}: unknown container format {doc.get('format')!r}")
    if doc.get("version") != FORMAT_VERSION:
        raise DataError(
            f"{path}: container version {doc.get('version')!r}, "
            f"this toolkit reads version {FORMAT_VERSION}"
        )
    if doc.get("kind") != kind:
        raise DataError(f"{path}: contains a {doc.get('kind')!r} model, expected {kind!r}")
    return doc["payload"]


def save_stpn(model: StpnModel, path: str | os.PathLike) -> None:
    payload = {
        "names": list(model.names),
        "alphabet_size": model.partition.alphabet_size,
        "edges": [e.tolist() for e in model.partition.edges],
        "depth": model.depth,
        "lag": model.lag,
        "window_length": model.window_length,
        "counts": model.counts.tolist(),
        "thresholds": model.thresholds.tolist(),
    }
    _dump("stpn", payload, os.fspath(path))


def load_stpn(path: str | os.PathLike) -> StpnModel:
    p = _load("stpn", os.fspath(path))
    partition = PartitionScheme(
        tuple(np.array(e, dtype=float) for e in p["edges"]), int(p["alphabet_size"])
    )
    return StpnModel(
        names=tuple(p["names"]),
        partition=partition,
        depth=int(p["depth"]),
        lag=int(p["lag"]),
        window_length=int(p["window_length"]),
        counts=np.array(p["counts"], dtype=np.int64),
        thresholds=np.array(p["thresholds"], dtype=float),
    )


def save_rbm(params: RbmParams, path: str | os.PathLike, threshold: float | None = None) -> None:
    payload = {
        "visible_bias": params.visible_bias.tolist(),
        "hidden_bias": params.hidden_bias.tolist(),
        "weights": params.weights.tolist(),
        "energy_threshold": threshold,
    }
    _dump("rbm", payload, os.fspath(path))


def load_rbm(path: str | os.PathLike) -> tuple[RbmParams, float | None]:
    p = _load("rbm", os.fspath(path))
    params = RbmParams(
        visible_bias=np.array(p["visible_bias"], dtype=float),
        hidden_bias=np.array(p["hidden_bias"], dtype=float),
        weights=np.array(p["weights"], dtype=float),
    )
    thr = p.get("energy_threshold")
    return params, (None if thr is None else float(thr))


def save_mlp(params: MlpParams, path: str | os.PathLike) -> None:
    payload = {
        "weights": [w.tolist() for w in params.weights],
        "biases": [b.tolist() for b in params.biases],
        "dropout": params.dropout,
    }
    _dump("mlp", payload, os.fspath(path))


def load_mlp(path: str | os.PathLike) -> MlpParams:
    p = _load("mlp", os.fspath(path))
    return MlpParams(
        tuple(np.array(w, dtype=float) for w in p["weights"]),
        tuple(np.array(b, dtype=float) for b in p["biases"]),
        dropout=float(p["dropout"]),
    )
