"""Datasets: synthetic generator, CSV ingestion, scaling, splitting, contamination."""

import csv
import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .exceptions import ContractViolation, DataIOError, ParseError


@dataclass(frozen=True)
class Dataset:
    """Paired samples.

    ``feature_ranges``/``target_ranges`` hold per-column ``(min, max)`` rows
    once the dataset has been normalised, and are ``None`` for raw data.
    ``outlier_mask`` flags rows whose outputs were corrupted.
    """

    x: np.ndarray
    y: np.ndarray
    feature_ranges: np.ndarray | None = None
    target_ranges: np.ndarray | None = None
    outlier_mask: np.ndarray | None = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if y.ndim == 1:
            y = y[:, None]
        if x.shape[0] != y.shape[0]:
            raise ContractViolation(f"x has {x.shape[0]} rows but y has {y.shape[0]}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if self.outlier_mask is not None:
            mask = np.asarray(self.outlier_mask, dtype=bool).ravel()
            if mask.shape[0] != x.shape[0]:
                raise ContractViolation("outlier mask length must equal the sample count")
            object.__setattr__(self, "outlier_mask", mask)

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def mask(self):
        return self.outlier_mask if self.outlier_mask is not None else np.zeros(self.n, dtype=bool)

    def subset(self, idx):
        mask = None if self.outlier_mask is None else self.outlier_mask[idx]
        return replace(self, x=self.x[idx], y=self.y[idx], outlier_mask=mask)


def target_function(x):
    """``0.2 exp(-(10x-4)^2) + 0.5 exp(-(80x-40)^2) + 0.3 exp(-(80x-20)^2)``."""
    x = np.asarray(x, dtype=float)
    return (0.2 * np.exp(-(10 * x - 4) ** 2)
            + 0.5 * np.exp(-(80 * x - 40) ** 2)
            + 0.3 * np.exp(-(80 * x - 20) ** 2))


def generate_synthetic(n_train, n_test, rng):
    """Training inputs uniform on [-1, 1]; test inputs an even grid on [-1, 1]."""
    if n_train < 1 or n_test < 1:
        raise ContractViolation("sample counts must be >= 1")
    x_train = rng.uniform(-1.0, 1.0, size=n_train)
    x_test = np.linspace(-1.0, 1.0, n_test) if n_test > 1 else np.array([-1.0])
    return (Dataset(x_train, target_function(x_train)),
            Dataset(x_test, target_function(x_test)))


def case_study_function(x):
    """Smooth 3-input response used as a stand-in for plant data."""
    x = np.asarray(x, dtype=float)
    return (0.6 * np.exp(-2.0 * (x[:, 0] - 0.4) ** 2)
            + 0.3 * np.sin(2.5 * x[:, 1]) * x[:, 2]
            - 0.2 * x[:, 0] * x[:, 2])


def generate_case_study(n_train, n_test, rng):
    """Three uniform inputs on [0, 1]^3 with :func:`case_study_function` outputs."""
    if n_train < 1 or n_test < 1:
        raise ContractViolation("sample counts must be >= 1")
    x_train = rng.uniform(0.0, 1.0, size=(n_train, 3))
    x_test = rng.uniform(0.0, 1.0, size=(n_test, 3))
    return (Dataset(x_train, case_study_function(x_train)),
            Dataset(x_test, case_study_function(x_test)))


class OutlierMode(enum.Enum):
    REPLACE = "replace"
    ADDITIVE = "additive"


def outlier_count(zeta, n):
    return int(math.floor(zeta * n + 0.5))


def inject_outliers(ds, zeta, noise_range, rng, mode=OutlierMode.REPLACE):
    """Corrupt the outputs of ``round(zeta * N)`` randomly chosen rows.

    ``REPLACE`` overwrites the output with ``U(low, high)``. ``ADDITIVE`` adds
    the draw to the existing output, so [0, 1] targets land in
    ``[low, 1 + high]``. Inputs are never touched.
    """
    mode = OutlierMode(mode)
    if not 0.0 <= zeta <= 1.0:
        raise ContractViolation(f"zeta must lie in [0, 1], got {zeta}")
    low, high = noise_range
    if not low < high:
        raise ContractViolation("noise range needs low < high")
    k = outlier_count(zeta, ds.n)
    mask = ds.mask.copy()
    y = ds.y.copy()
    if k:
        rows = rng.permutation(ds.n)[:k]
        noise = rng.uniform(low, high, size=(k, y.shape[1]))
        if mode is OutlierMode.REPLACE:
            y[rows] = noise
        else:
            y[rows] = y[rows] + noise
        mask[rows] = True
    return replace(ds, y=y, outlier_mask=mask)


def column_ranges(a):
    return np.column_stack([a.min(axis=0), a.max(axis=0)])


def _scale(a, ranges):
    lo, hi = ranges[:, 0], ranges[:, 1]
    span = hi - lo
    # constant columns map to 0.5
    return np.where(span > 0, (a - lo) / np.where(span > 0, span, 1.0), 0.5)


def _unscale(a, ranges):
    lo, hi = ranges[:, 0], ranges[:, 1]
    return np.where(hi > lo, lo + a * (hi - lo), lo)


def normalize(ds, feature_ranges=None, target_ranges=None):
    """Map every column onto [0, 1] by min-max scaling.

    Ranges default to the dataset's own column extremes; pass the ranges of a
    training set to scale a held-out set consistently.
    """
    fr = column_ranges(ds.x) if feature_ranges is None else np.asarray(feature_ranges, dtype=float)
    tr = column_ranges(ds.y) if target_ranges is None else np.asarray(target_ranges, dtype=float)
    return replace(ds, x=_scale(ds.x, fr), y=_scale(ds.y, tr), feature_ranges=fr, target_ranges=tr)


def denormalize(ds, values):
    """Map normalised output values back to the raw target scale of ``ds``."""
    if ds.target_ranges is None:
        raise ContractViolation("dataset carries no normalisation ranges")
    v = np.asarray(values, dtype=float)
    flat = v.ndim == 1
    out = _unscale(v[:, None] if flat else v, ds.target_ranges)
    return out[:, 0] if flat else out


def denormalize_inputs(ds, values):
    if ds.feature_ranges is None:
        raise ContractViolation("dataset carries no normalisation ranges")
    return _unscale(np.asarray(values, dtype=float), ds.feature_ranges)


def split(ds, train_fraction, rng):
    """Random partition into ``round(fraction * N)`` and the remainder."""
    if not 0.0 < train_fraction < 1.0:
        raise ContractViolation("train_fraction must lie in (0, 1)")
    k = outlier_count(train_fraction, ds.n)
    perm = rng.permutation(ds.n)
    return ds.subset(np.sort(perm[:k])), ds.subset(np.sort(perm[k:]))


@dataclass(frozen=True)
class CsvSchema:
    """Column selection. Entries are 0-based indices, or header names when ``has_header``."""

    input_cols: tuple
    output_cols: tuple
    has_header: bool = False


def _resolve(cols, header):
    out = []
    for c in cols:
        if isinstance(c, str) and not c.lstrip("-").isdigit():
            if header is None or c not in header:
                raise ParseError(f"unknown column {c!r}")
            out.append(header.index(c))
        else:
            out.append(int(c))
    return out


def load_csv(path, schema):
    """Read a numeric comma-separated file into a :class:`Dataset`.

    Blank lines and lines starting with ``@`` or ``#`` (KEEL ``.dat``
    headers) are skipped. Errors report 1-based file line and column.
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataIOError(f"cannot read {path}: {exc.strerror}") from exc
    header = None
    rows = []
    width = None
    with fh:
        for lineno, record in enumerate(csv.reader(fh), start=1):
            if not record or not "".join(record).strip():
                continue
            if record[0].lstrip().startswith(("@", "#")):
                continue
            if schema.has_header and header is None:
                header = [c.strip() for c in record]
                width = len(header)
                continue
            if width is None:
                width = len(record)
            elif len(record) != width:
                raise ParseError(f"expected {width} fields, found {len(record)}", row=lineno)
            values = []
            for col, cell in enumerate(record, start=1):
                try:
                    v = float(cell)
                except ValueError:
                    raise ParseError(f"non-numeric cell {cell.strip()!r}", row=lineno, col=col) from None
                if not math.isfinite(v):
                    raise ParseError(f"non-finite cell {cell.strip()!r}", row=lineno, col=col)
                values.append(v)
            rows.append(values)
    if not rows:
        raise ParseError(f"{path} contains no data rows")
    table = np.array(rows)
    ins = _resolve(schema.input_cols, header)
    outs = _resolve(schema.output_cols, header)
    for c in ins + outs:
        if not -width <= c < width:
            raise ParseError(f"column index {c} out of range for {width} columns")
    return Dataset(table[:, ins], table[:, outs])
