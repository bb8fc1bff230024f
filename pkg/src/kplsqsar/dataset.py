"""Tabular sample ingestion and robust per-feature scaling."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError

RESPONSE_COLUMN = "response"
SCALING_MODES = ("mad", "meanabs", "none")


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Sample table of ``n_samples`` rows by ``n_features`` columns.

    ``response`` is ``None`` for feature-only (prediction) sets.
    """

    features: np.ndarray
    response: np.ndarray | None = None
    sample_ids: tuple = ()
    feature_names: tuple = ()

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2:
            raise DataError(f"features must be a 2-D table, got {X.ndim} dimensions")
        if not np.all(np.isfinite(X)):
            r, c = np.argwhere(~np.isfinite(X))[0]
            raise DataError(f"non-finite feature at row {r + 1}, feature {c + 1}")
        n, p = X.shape
        object.__setattr__(self, "features", _frozen(X))
        if self.response is not None:
            y = np.asarray(self.response, dtype=float).ravel()
            if y.shape[0] != n:
                raise DataError(f"response has {y.shape[0]} entries for {n} samples")
            if not np.all(np.isfinite(y)):
                raise DataError("non-finite response value")
            object.__setattr__(self, "response", _frozen(y))
        ids = tuple(str(s) for s in self.sample_ids) or tuple(f"s{i + 1}" for i in range(n))
        names = tuple(str(s) for s in self.feature_names) or tuple(f"f{j + 1}" for j in range(p))
        if len(ids) != n:
            raise DataError(f"{len(ids)} sample ids for {n} samples")
        if len(names) != p:
            raise DataError(f"{len(names)} feature names for {p} features")
        object.__setattr__(self, "sample_ids", ids)
        object.__setattr__(self, "feature_names", names)

    @property
    def n_samples(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    def subset(self, rows):
        rows = np.asarray(rows, dtype=int)
        return Dataset(
            self.features[rows],
            None if self.response is None else self.response[rows],
            tuple(self.sample_ids[i] for i in rows),
            self.feature_names,
        )

    def with_features(self, features):
        return Dataset(features, self.response, self.sample_ids, self.feature_names)


@dataclass(frozen=True)
class ScalingParams:
    medians: np.ndarray
    deviations: np.ndarray
    degenerate_mask: np.ndarray = field(default=None)
    mode: str = "mad"

    def __post_init__(self):
        med = _frozen(np.ravel(self.medians))
        dev = _frozen(np.ravel(self.deviations))
        if med.shape != dev.shape:
            raise DataError("medians and deviations differ in length")
        if np.any(dev < 0):
            raise DataError("deviations must be non-negative")
        object.__setattr__(self, "medians", med)
        object.__setattr__(self, "deviations", dev)
        object.__setattr__(self, "degenerate_mask", _frozen(dev == 0, dtype=bool))

    def __len__(self):
        return self.medians.shape[0]


def _parse_cell(text, row, col):
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"non-numeric value {text!r} at row {row}, column {col}") from None
    if not math.isfinite(value):
        raise DataError(f"non-finite value {text!r} at row {row}, column {col}")
    return value


def load_table(path, has_response=None):
    """Read a delimited sample table.

    The first column holds sample ids and a trailing column named
    ``response`` holds the responses. Comma or tab delimiters are detected
    from the header line.

    Parameters
    ----------
    path : str or Path
    has_response : bool or None
        ``True`` requires a response column, ``False`` forbids one and
        ``None`` accepts either.

    Rows and columns in error messages are 1-based; row 1 is the first line
    after the header and column 1 is the sample id column.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        header_line = fh.readline()
        if not header_line.strip():
            raise DataError(f"{path}: empty file or missing header")
        delimiter = "\t" if "\t" in header_line else ","
        header = [h.strip() for h in next(csv.reader([header_line], delimiter=delimiter))]
        body = [r for r in csv.reader(fh, delimiter=delimiter) if any(c.strip() for c in r)]
    if len(header) < 2:
        raise DataError(f"{path}: header needs an id column and at least one data column")

    found_response = header[-1].lower() == RESPONSE_COLUMN
    if has_response and not found_response:
        raise DataError(f"{path}: expected a trailing {RESPONSE_COLUMN!r} column")
    if has_response is False and found_response:
        raise DataError(f"{path}: unexpected {RESPONSE_COLUMN!r} column")
    n_feat = len(header) - 1 - int(found_response)
    if n_feat < 1:
        raise DataError(f"{path}: no feature columns")
    if not body:
        raise DataError(f"{path}: no data rows")

    ids, values = [], np.empty((len(body), len(header) - 1))
    for i, row in enumerate(body):
        if len(row) != len(header):
            raise DataError(f"{path}: row {i + 1} has {len(row)} fields, header has {len(header)}")
        ids.append(row[0].strip())
        values[i] = [_parse_cell(c, i + 1, j + 2) for j, c in enumerate(row[1:])]
    if len(set(ids)) != len(ids):
        raise DataError(f"{path}: duplicate sample ids")
    return Dataset(
        values[:, :n_feat],
        values[:, n_feat] if found_response else None,
        tuple(ids),
        tuple(header[1 : 1 + n_feat]),
    )


def write_table(data, path, delimiter=","):
    """Write ``data`` in the format read by :func:`load_table`.

    Values use ``repr`` so every float round-trips exactly.
    """
    header = ["id", *data.feature_names]
    if data.response is not None:
        header.append(RESPONSE_COLUMN)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow(header)
        for i, sid in enumerate(data.sample_ids):
            row = [sid, *(repr(float(v)) for v in data.features[i])]
            if data.response is not None:
                row.append(repr(float(data.response[i])))
            w.writerow(row)


def _median(X):
    # np.median averages the two middle order statistics for even counts
    return np.median(X, axis=0)


def scale_fit(data, mode="mad"):
    """Per-feature location and spread for robust scaling.

    ``mode='mad'`` uses the median absolute deviation about the median,
    ``'meanabs'`` the mean absolute deviation about the median, and
    ``'none'`` the identity transform (zero location, unit spread).
    """
    X = data.features if isinstance(data, Dataset) else np.atleast_2d(np.asarray(data, float))
    if mode not in SCALING_MODES:
        raise ConfigError(f"unknown scaling mode {mode!r}; choose from {SCALING_MODES}")
    n, p = X.shape
    if n < 1:
        raise DataError("cannot fit scaling on zero samples")
    if mode == "none":
        return ScalingParams(np.zeros(p), np.ones(p), mode=mode)
    med = _median(X)
    absdev = np.abs(X - med)
    dev = _median(absdev) if mode == "mad" else absdev.mean(axis=0)
    return ScalingParams(med, dev, mode=mode)


def scale_features(X, params):
    X = np.asarray(X, dtype=float)
    if X.shape[-1] != len(params):
        raise DataError(f"data has {X.shape[-1]} features, scaling expects {len(params)}")
    safe = np.where(params.degenerate_mask, 1.0, params.deviations)
    out = (X - params.medians) / safe
    out[..., params.degenerate_mask] = 0.0
    return out


def scale_apply(data, params):
    """Center and scale ``data`` with ``params``; degenerate columns become zero."""
    return data.with_features(scale_features(data.features, params))


def join_features(base, extra):
    """Append the columns of ``extra`` to ``base``, matching rows by sample id.

    Both tables must cover exactly the same ids; row order follows ``base``.
    """
    index = {sid: i for i, sid in enumerate(extra.sample_ids)}
    missing = [sid for sid in base.sample_ids if sid not in index]
    if missing:
        raise DataError(f"no descriptors for sample id {missing[0]!r}")
    unknown = sorted(set(extra.sample_ids) - set(base.sample_ids))
    if unknown:
        raise DataError(f"sample id {unknown[0]!r} is not in the dataset")
    clash = set(base.feature_names) & set(extra.feature_names)
    if clash:
        raise DataError(f"duplicate feature name {sorted(clash)[0]!r}")
    rows = [index[sid] for sid in base.sample_ids]
    return Dataset(
        np.hstack([base.features, extra.features[rows]]),
        base.response,
        base.sample_ids,
        base.feature_names + extra.feature_names,
    )
