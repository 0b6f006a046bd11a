"""Versioned text model format.

A model file is a JSON document. Arrays are stored either as decimal
literals (``"encoding": "decimal"``, shortest round-trip repr) or as
base64-packed little-endian float64 (``"encoding": "base64-f64le"``).
Both reload bit-exactly.
"""
from __future__ import annotations

import base64
import json
import re

import numpy as np

from ..nncore import Layer, Model, Standardization

FORMAT_NAME = "igattack-model"
FORMAT_VERSION = 1
ENCODINGS = ("decimal", "base64-f64le")


class ModelFileError(ValueError):
    pass


class FormatVersionError(ModelFileError):
    pass


class DimensionError(ModelFileError):
    pass


class TruncatedPayloadError(ModelFileError):
    pass


def _encode(a: np.ndarray, encoding: str):
    if encoding == "decimal":
        return a.tolist()
    return base64.b64encode(np.ascontiguousarray(a, dtype="<f8").tobytes()).decode("ascii")


def _decode(payload, shape: tuple, encoding: str, what: str) -> np.ndarray:
    if encoding == "decimal":
        try:
            arr = np.array(payload, dtype=np.float64)
        except (TypeError, ValueError):
            raise DimensionError(f"{what}: ragged or non-numeric array") from None
        if arr.shape != shape:
            raise DimensionError(f"{what}: declared shape {shape}, found {arr.shape}")
        return arr
    if encoding == "base64-f64le":
        if not isinstance(payload, str):
            raise ModelFileError(f"{what}: expected a base64 string")
        try:
            raw = base64.b64decode(payload.encode("ascii"), validate=True)
        except ValueError:
            raise TruncatedPayloadError(f"{what}: base64 payload is cut short or corrupt") from None
        expected = int(np.prod(shape)) * 8
        if len(raw) < expected:
            raise TruncatedPayloadError(f"{what}: payload has {len(raw)} bytes, expected {expected}")
        if len(raw) > expected:
            raise DimensionError(f"{what}: payload has {len(raw)} bytes, declared shape needs {expected}")
        return np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(shape)
    raise ModelFileError(f"{what}: unknown encoding {encoding!r}")


def model_to_document(model: Model, encoding: str = "decimal") -> dict:
    if encoding not in ENCODINGS:
        raise ValueError(f"encoding must be one of {ENCODINGS}")
    doc = {
        "format": FORMAT_NAME,
        "format_version": FORMAT_VERSION,
        "encoding": encoding,
        "input_dim": model.input_dim,
        "num_classes": model.num_classes,
        "preprocessing": None,
        "layers": [],
    }
    if model.preprocessing is not None:
        doc["preprocessing"] = {
            "mean": _encode(model.preprocessing.mean, encoding),
            "std": _encode(model.preprocessing.std, encoding),
        }
    for layer in model.layers:
        doc["layers"].append({
            "in_dim": layer.in_dim,
            "out_dim": layer.out_dim,
            "activation": layer.activation,
            "slope": layer.slope,
            "weights": _encode(layer.weights, encoding),
            "biases": _encode(layer.biases, encoding),
        })
    return doc


def model_from_document(doc: dict) -> Model:
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_NAME:
        raise ModelFileError("not an igattack model document")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise FormatVersionError(f"unsupported format_version {version!r} (this build reads {FORMAT_VERSION})")
    encoding = doc.get("encoding", "decimal")
    try:
        n = int(doc["input_dim"])
        m = int(doc["num_classes"])
        layers = []
        for k, spec in enumerate(doc["layers"]):
            shape = (int(spec["out_dim"]), int(spec["in_dim"]))
            W = _decode(spec["weights"], shape, encoding, f"layer {k} weights")
            b = _decode(spec["biases"], (shape[0],), encoding, f"layer {k} biases")
            layers.append(Layer(W, b, spec["activation"], spec.get("slope", 0.01)))
        pre = None
        if doc.get("preprocessing") is not None:
            pre = Standardization(
                _decode(doc["preprocessing"]["mean"], (n,), encoding, "preprocessing mean"),
                _decode(doc["preprocessing"]["std"], (n,), encoding, "preprocessing std"),
            )
    except KeyError as exc:
        raise ModelFileError(f"missing field {exc.args[0]!r}") from None
    if not layers:
        raise DimensionError("model has no layers")
    for k in range(1, len(layers)):
        if layers[k].in_dim != layers[k - 1].out_dim:
            raise DimensionError(f"layer {k} in_dim does not match layer {k - 1} out_dim")
    if layers[0].in_dim != n or layers[-1].out_dim != m:
        raise DimensionError("input_dim/num_classes disagree with the layer stack")
    return Model(tuple(layers), pre)


_INNER_ARRAY = re.compile(r"\[\s+([^\[\]{}\"]*?)\s+\]")


def dumps_model(model: Model, encoding: str = "decimal") -> str:
    text = json.dumps(model_to_document(model, encoding), indent=2)
    # one numeric row per line keeps weight matrices diffable
    text = _INNER_ARRAY.sub(lambda mt: "[" + ", ".join(p.strip() for p in mt.group(1).split(",")) + "]", text)
    return text + "\n"


def loads_model(text: str) -> Model:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        if exc.pos >= len(text.rstrip()):
            raise TruncatedPayloadError(f"model document ends early: {exc.msg}") from None
        raise ModelFileError(f"malformed model document: {exc}") from None
    return model_from_document(doc)


def save_model(model: Model, path, encoding: str = "decimal") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_model(model, encoding))


def load_model(path) -> Model:
    with open(path, encoding="utf-8") as fh:
        return loads_model(fh.read())
