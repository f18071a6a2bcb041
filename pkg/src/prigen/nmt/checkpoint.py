"""Model checkpoints as JSON with base64 little-endian float64 arrays.

JSON is used instead of npz so that identical models give byte-identical
files (zip members carry timestamps).
"""
from __future__ import annotations

import base64
import json

import numpy as np

from ..errors import CheckpointError
from .model import HyperParams, Model, param_shapes
from .vocab import Vocab

FORMAT = "prigen-nmt"
VERSION = 1


def dumps(model: Model) -> bytes:
    arrays = {}
    for name in sorted(model.params):
        a = np.ascontiguousarray(model.params[name], dtype="<f8")
        arrays[name] = {"shape": list(a.shape),
                        "data": base64.b64encode(a.tobytes(order="C")).decode("ascii")}
    doc = {"format": FORMAT, "version": VERSION, "hyper": model.hyper.to_json(),
           "vocab": model.vocab.to_json(), "params": arrays}
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")


def loads(data: bytes) -> Model:
    try:
        doc = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CheckpointError(f"not a checkpoint: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise CheckpointError("not a checkpoint: missing format tag")
    if doc.get("version") != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {doc.get('version')!r}")
    try:
        hyper = HyperParams.from_json(doc["hyper"])
        vocab = Vocab.from_json(doc["vocab"])
        expected = param_shapes(hyper, vocab)
        params = {}
        for name, shape in expected.items():
            entry = doc["params"][name]
            if tuple(entry["shape"]) != shape:
                raise CheckpointError(f"{name}: shape {entry['shape']} != expected {list(shape)}")
            raw = base64.b64decode(entry["data"], validate=True)
            if len(raw) != 8 * int(np.prod(shape)):
                raise CheckpointError(f"{name}: byte length does not match shape")
            params[name] = np.frombuffer(raw, dtype="<f8").reshape(shape).astype(np.float64)
        extra = set(doc["params"]) - set(expected)
        if extra:
            raise CheckpointError(f"unexpected parameters: {sorted(extra)}")
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, CheckpointError):
            raise
        raise CheckpointError(f"malformed checkpoint: {exc}") from exc
    for name, a in params.items():
        if not np.all(np.isfinite(a)):
            raise CheckpointError(f"{name}: non-finite values")
    return Model(hyper, vocab, params)


def save(model: Model, path) -> None:
    with open(path, "wb") as fh:
        fh.write(dumps(model))


def load(path) -> Model:
    try:
        with open(path, "rb") as fh:
            return loads(fh.read())
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
