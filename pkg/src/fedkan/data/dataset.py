"""Tabular datasets: CSV ingestion, stratified splitting and standardization."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np


class DataError(ValueError):
    """Malformed input data or an impossible split."""


@dataclass(frozen=True)
class CsvSchema:
    label_column: str
    categorical_columns: tuple[str, ...] = ()
    drop_columns: tuple[str, ...] = ()
    delimiter: str = ","

    @classmethod
    def from_dict(cls, d: dict) -> CsvSchema:
        return cls(
            label_column=d["label_column"],
            categorical_columns=tuple(d.get("categorical_columns", ())),
            drop_columns=tuple(d.get("drop_columns", ())),
            delimiter=d.get("delimiter", ","),
        )


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    class_count: int
    feature_names: list[str] = field(default_factory=list)
    class_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2 or self.features.shape[0] != self.labels.shape[0]:
            raise DataError(f"features {self.features.shape} and labels {self.labels.shape} disagree")
        if not np.all(np.isfinite(self.features)):
            raise DataError("features contain NaN or infinite values")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.class_count):
            raise DataError(f"labels must lie in [0, {self.class_count})")
        if not self.feature_names:
            self.feature_names = [f"x{i}" for i in range(self.n_features)]

    def __len__(self) -> int:
        return self.labels.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def subset(self, indices) -> Dataset:
        idx = np.asarray(indices, dtype=np.int64)
        return replace(self, features=self.features[idx], labels=self.labels[idx])

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.class_count)


def _is_missing(value: str) -> bool:
    return value.strip() in ("", "NA", "N/A", "NaN", "nan", "null", "NULL", "?")


def load_csv(path, schema: CsvSchema | dict) -> Dataset:
    """Read a headed CSV into an encoded, unscaled :class:`Dataset`.

    Rows with any missing value are dropped. Categorical columns are one-hot
    encoded (one column per category, in first-appearance order, replacing
    the original column in place). Labels are indexed by first appearance.
    Every remaining non-dropped column must be numeric. Standardization
    happens later, on the training split only (see :func:`prepare_split`).
    """
    if isinstance(schema, dict):
        schema = CsvSchema.from_dict(schema)
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"dataset file not found: {path}")
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh, delimiter=schema.delimiter)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path} is empty")
        header = [h.strip() for h in header]
        rows = [r for r in reader if r]

    for col in (schema.label_column, *schema.categorical_columns, *schema.drop_columns):
        if col not in header:
            raise DataError(f"column {col!r} not found in {path.name}; header is {header}")
    rows = [r for r in rows if len(r) == len(header) and not any(_is_missing(v) for v in r)]
    if not rows:
        raise DataError(f"{path} has no complete data rows")

    label_idx = header.index(schema.label_column)
    skip = {schema.label_column, *schema.drop_columns}
    categorical = set(schema.categorical_columns)

    columns: list[np.ndarray] = []
    names: list[str] = []
    for j, col in enumerate(header):
        if col in skip:
            continue
        raw = [r[j].strip() for r in rows]
        if col in categorical:
            levels = list(dict.fromkeys(raw))
            lookup = {v: i for i, v in enumerate(levels)}
            codes = np.array([lookup[v] for v in raw])
            for i, level in enumerate(levels):
                columns.append((codes == i).astype(np.float64))
                names.append(f"{col}={level}")
        else:
            values = np.empty(len(raw))
            for n, v in enumerate(raw):
                try:
                    values[n] = float(v)
                except ValueError:
                    raise DataError(
                        f"non-numeric value {v!r} in numeric column {col!r} (data row {n + 1})"
                    ) from None
                if not math.isfinite(values[n]):
                    raise DataError(f"non-finite value {v!r} in column {col!r}")
            columns.append(values)
            names.append(col)

    raw_labels = [r[label_idx].strip() for r in rows]
    classes = list(dict.fromkeys(raw_labels))
    lookup = {v: i for i, v in enumerate(classes)}
    labels = np.array([lookup[v] for v in raw_labels])
    features = np.column_stack(columns) if columns else np.zeros((len(rows), 0))
    return Dataset(features, labels, len(classes), names, classes)


def train_test_split(d: Dataset, test_fraction: float = 0.2, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Stratified split: each class contributes ``round(test_fraction * n_c)`` test samples."""
    if not 0.0 < test_fraction < 0.5:
        raise ValueError("test_fraction must lie in (0, 0.5)")
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for c in range(d.class_count):
        members = np.flatnonzero(d.labels == c)
        if members.size == 0:
            continue
        if members.size < 2:
            raise DataError(f"class {c} has fewer than 2 samples; cannot stratify")
        members = rng.permutation(members)
        n_test = min(max(1, int(round(test_fraction * members.size))), members.size - 1)
        test_idx.append(members[:n_test])
        train_idx.append(members[n_test:])
    train_idx = np.sort(np.concatenate(train_idx))
    test_idx = np.sort(np.concatenate(test_idx))
    return d.subset(train_idx), d.subset(test_idx)


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, d: Dataset) -> Standardizer:
        mean = d.features.mean(axis=0)
        std = d.features.std(axis=0)
        # constant columns are only centered
        return cls(mean, np.where(std > 0, std, 1.0))

    def transform(self, d: Dataset) -> Dataset:
        return replace(d, features=(d.features - self.mean) / self.scale)


def prepare_split(d: Dataset, test_fraction: float = 0.2, seed: int = 0):
    """Split, then z-score both halves with statistics fitted on train only.

    Returns ``(train, test, standardizer)``.
    """
    train, test = train_test_split(d, test_fraction, seed)
    missing = np.flatnonzero(train.class_counts() == 0)
    if missing.size:
        raise DataError(f"classes {missing.tolist()} appear only in the test split")
    scaler = Standardizer.fit(train)
    return scaler.transform(train), scaler.transform(test), scaler
