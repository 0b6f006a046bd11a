"""Tabular datasets: CSV ingestion with a schema sidecar, and synthetic blobs.

Continuous columns are min-max scaled into ``[0, 1]`` and categorical
columns are one-hot expanded, so every :class:`Dataset` lives in the attack
box. The fitted schema (ranges, category lists, class names) travels with
the dataset and can be reused to load a test split with training statistics.

Schema sidecar (JSON)::

    {"label": "attack_type",
     "columns": [{"name": "duration", "kind": "continuous"},
                 {"name": "protocol", "kind": "categorical",
                  "categories": ["tcp", "udp", "icmp"]}],
     "classes": ["normal", "dos"]}

Header columns not listed are continuous. ``min``/``max`` on a continuous
column, ``categories`` on a categorical one, and ``classes`` are optional;
whatever is missing is fitted from the file being loaded.
"""
from __future__ import annotations

import copy
import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)


class DataError(ValueError):
    """Malformed or inconsistent dataset input."""


@dataclass(frozen=True, eq=False)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]
    schema: dict = field(default_factory=dict)
    classes: tuple[str, ...] = ()

    def __post_init__(self):
        X = np.array(self.features, dtype=np.float64, order="C")
        y = np.array(self.labels, dtype=np.int64)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise DataError(f"features {X.shape} and labels {y.shape} do not line up")
        if X.shape[1] != len(self.feature_names):
            raise DataError("feature_names length differs from feature width")
        if not np.all(np.isfinite(X)) or X.size and (X.min() < 0.0 or X.max() > 1.0):
            raise DataError("feature values must be finite and inside [0, 1]")
        if y.size and y.min() < 0:
            raise DataError("labels must be non-negative class indices")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "classes", tuple(self.classes))

    def __len__(self):
        return self.labels.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        if self.classes:
            return len(self.classes)
        return int(self.labels.max()) + 1 if len(self) else 0

    def subset(self, index) -> "Dataset":
        index = np.asarray(index, dtype=np.int64)
        return Dataset(self.features[index], self.labels[index], self.feature_names, self.schema, self.classes)


def read_schema(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        schema = json.load(fh)
    if "label" not in schema:
        raise DataError(f"schema {path} does not name a label column")
    return schema


def write_schema(schema: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(schema, fh, indent=2, sort_keys=True)
        fh.write("\n")


def schema_path_for(csv_path) -> Path:
    return Path(str(csv_path) + ".schema.json")


def _parse_float(cell: str, row: int, col: str) -> float:
    try:
        v = float(cell)
    except ValueError:
        raise DataError(f"row {row}, column {col!r}: non-numeric value {cell!r}") from None
    if not math.isfinite(v):
        raise DataError(f"row {row}, column {col!r}: non-finite value {cell!r}")
    return v


def load_csv(path, schema=None) -> Dataset:
    """Load a CSV file into a scaled, one-hot encoded :class:`Dataset`.

    ``schema`` may be a dict, a path to a sidecar file, or ``None`` to read
    ``<path>.schema.json``.
    """
    if schema is None:
        sidecar = schema_path_for(path)
        if not sidecar.exists():
            raise DataError(f"no schema given and no sidecar at {sidecar}")
        schema = read_schema(sidecar)
    elif not isinstance(schema, dict):
        schema = read_schema(schema)
    schema = copy.deepcopy(schema)

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path} is empty") from None
        rows = [r for r in reader if r]

    label_col = schema["label"]
    if label_col not in header:
        raise DataError(f"label column {label_col!r} not in header of {path}")
    for r, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise DataError(f"row {r}: expected {len(header)} cells, got {len(row)}")

    declared = {c["name"]: c for c in schema.get("columns", [])}
    for name in declared:
        if name not in header:
            raise DataError(f"schema column {name!r} not in header of {path}")
    columns = []
    for name in header:
        if name == label_col:
            continue
        spec = dict(declared.get(name, {"name": name, "kind": "continuous"}))
        spec["name"] = name
        if spec.get("kind") not in ("continuous", "categorical"):
            raise DataError(f"column {name!r}: unknown kind {spec.get('kind')!r}")
        columns.append(spec)

    pos = {name: i for i, name in enumerate(header)}
    blocks, names = [], []
    for spec in columns:
        cells = [row[pos[spec["name"]]].strip() for row in rows]
        if spec["kind"] == "continuous":
            values = np.array([_parse_float(c, r, spec["name"]) for r, c in enumerate(cells, start=2)])
            if "min" not in spec or "max" not in spec:
                spec["min"] = float(values.min()) if values.size else 0.0
                spec["max"] = float(values.max()) if values.size else 1.0
            lo, hi = float(spec["min"]), float(spec["max"])
            if hi > lo:
                scaled = np.clip((values - lo) / (hi - lo), 0.0, 1.0)
            else:
                log.warning("column %r has zero range; scaled to 0", spec["name"])
                scaled = np.zeros_like(values)
            blocks.append(scaled[:, None])
            names.append(spec["name"])
        else:
            if "categories" not in spec:
                spec["categories"] = list(dict.fromkeys(cells))
            cats = [str(c) for c in spec["categories"]]
            where = {c: i for i, c in enumerate(cats)}
            onehot = np.zeros((len(cells), len(cats)))
            for r, c in enumerate(cells):
                if c not in where:
                    raise DataError(f"row {r + 2}, column {spec['name']!r}: unknown category {c!r} (known: {cats})")
                onehot[r, where[c]] = 1.0
            blocks.append(onehot)
            names.extend(f"{spec['name']}={c}" for c in cats)

    labels_raw = [row[pos[label_col]].strip() for row in rows]
    if "classes" not in schema:
        schema["classes"] = list(dict.fromkeys(labels_raw))
    classes = [str(c) for c in schema["classes"]]
    class_index = {c: i for i, c in enumerate(classes)}
    try:
        labels = np.array([class_index[v] for v in labels_raw], dtype=np.int64)
    except KeyError as exc:
        raise DataError(f"unknown class label {exc.args[0]!r} (known: {classes})") from None

    schema["columns"] = columns
    X = np.hstack(blocks) if blocks else np.zeros((len(rows), 0))
    return Dataset(X, labels, tuple(names), schema, tuple(classes))


def write_csv(dataset: Dataset, path, schema_path=None) -> Path:
    """Write features and labels as CSV plus a sidecar that reloads them exactly."""
    names = list(dataset.feature_names)
    label_col = "label"
    while label_col in names:
        label_col = "_" + label_col
    classes = list(dataset.classes) or [str(i) for i in range(dataset.n_classes)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names + [label_col])
        for row, y in zip(dataset.features, dataset.labels):
            writer.writerow([repr(float(v)) for v in row] + [classes[int(y)]])
    schema = {
        "label": label_col,
        # identity scaling: the values are already in [0, 1]
        "columns": [{"name": n, "kind": "continuous", "min": 0.0, "max": 1.0} for n in names],
        "classes": classes,
    }
    sidecar = Path(schema_path) if schema_path else schema_path_for(path)
    write_schema(schema, sidecar)
    return sidecar


def synth_blobs(seed: int, n_samples: int = 2000, n_features: int = 20, n_classes: int = 5,
                spread: float = 0.05) -> Dataset:
    """Balanced Gaussian clusters around random centers in ``[0.2, 0.8]^d``, truncated to ``[0, 1]``."""
    if n_classes < 2 or n_features < 2:
        raise ValueError("need at least 2 classes and 2 features")
    if not spread > 0:
        raise ValueError("spread must be > 0")
    rng = np.random.default_rng(seed)
    centers = rng.uniform(0.2, 0.8, size=(n_classes, n_features))
    labels = np.arange(n_samples) % n_classes
    labels = labels[rng.permutation(n_samples)]
    X = np.clip(centers[labels] + spread * rng.standard_normal((n_samples, n_features)), 0.0, 1.0)
    names = tuple(f"f{i}" for i in range(n_features))
    return Dataset(X, labels, names, {"label": "label"}, tuple(str(i) for i in range(n_classes)))


def train_test_split(dataset: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    if not 0 <= test_fraction < 1:
        raise ValueError("test_fraction must be in [0, 1)")
    order = np.random.default_rng(seed).permutation(len(dataset))
    n_test = int(round(test_fraction * len(dataset)))
    return dataset.subset(np.sort(order[n_test:])), dataset.subset(np.sort(order[:n_test]))
