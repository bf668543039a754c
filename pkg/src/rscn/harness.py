"""Multi-trial experiments, robustness sweeps and report emission.

Every trial draws fresh data from a seed that is a pure function of
``(seed_base, cell, trial)``, so reports do not depend on execution order or
worker count. The data seed depends only on ``(zeta, trial)``, so all
learners in one report see the same contaminated training sets.

Per-trial protocol
------------------
1. Obtain clean data. Synthetic sources generate a training and a test set;
   CSV sources split the file ``train_fraction`` / rest.
2. Min-max scale outputs (and inputs when ``normalize_inputs``) with the
   clean training ranges.
3. Hold out ``validation_fraction`` of the clean training rows for
   RSC-KDE's stopping and node selection.
4. Contaminate the remaining training rows; the test set stays clean.
5. Train, predict the test inputs, score RMSE (in original output units, or
   normalised units when ``rmse_normalized``).

CSV report columns (fixed order, see ``CSV_COLUMNS``)::

    algorithm, zeta, lambda, L, mean_rmse, std_rmse, trials, seeds, status, reason

``lambda`` is empty for the incrementally built learners and ``L`` is their
node cap. ``seeds`` is a space-separated list of model seeds. Wall times are
kept out of the CSV (they would break byte-for-byte reproducibility) and
appear in the JSON dump only.
"""

import csv
import hashlib
import io
import json
import math
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import __version__
from .baselines import RvflConfig, train_rvfl, train_weighted_rvfl
from .configurator import ScnConfig, build_round
from .data import (CsvSchema, Dataset, OutlierMode, column_ranges, generate_case_study,
                   generate_synthetic, inject_outliers, load_csv, normalize, split)
from .exceptions import ContractViolation, DataError, DataIOError, RscnError
from .model import forward
from .robust import AoConfig, train_rsc_kde

ALGORITHMS = ("rsc_kde", "scn_plain", "rvfl", "weighted_rvfl")
SCN_ALGORITHMS = ("rsc_kde", "scn_plain")
SOURCES = ("synthetic", "case_study", "csv")
CSV_COLUMNS = ("algorithm", "zeta", "lambda", "L", "mean_rmse", "std_rmse", "trials", "seeds",
               "status", "reason")
_SEED_MASK = (1 << 63) - 1


def rmse(pred, truth):
    """Root mean squared error over all entries of equally shaped arrays."""
    p = np.asarray(pred, dtype=float)
    t = np.asarray(truth, dtype=float)
    if p.shape != t.shape:
        raise ContractViolation(f"shape mismatch: {p.shape} vs {t.shape}")
    if p.size == 0:
        raise ContractViolation("rmse of an empty set")
    return float(np.sqrt(np.mean((p - t) ** 2)))


def derive_seed(seed_base, *key):
    """``seed_base XOR blake2b(key)``, folded into 63 bits."""
    digest = hashlib.blake2b(repr(key).encode(), digest_size=8).digest()
    return (int(seed_base) ^ int.from_bytes(digest, "little")) & _SEED_MASK


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to reproduce a report.

    ``lambda_grid`` and ``l_grid`` apply to the fixed-basis learners only;
    the incrementally built learners use ``scn.l_max``. ``normalize_inputs``
    and ``rmse_normalized`` default to ``False`` for the one-dimensional
    synthetic source and ``True`` otherwise.
    """

    source: str = "synthetic"
    csv_path: str | None = None
    schema: CsvSchema | None = None
    algorithms: tuple = ALGORITHMS
    zeta_grid: tuple = (0.0,)
    lambda_grid: tuple = (1.0,)
    l_grid: tuple = (100,)
    trials: int = 20
    seed_base: int = 0
    scn: ScnConfig = field(default_factory=ScnConfig)
    i_max: int = 5
    warm_start: bool = False
    use_validation: bool = True
    rvfl_ao_rounds: int = 3
    outlier_mode: OutlierMode = OutlierMode.REPLACE
    noise_range: tuple = (-0.2, 0.8)
    n_train: int = 600
    n_test: int = 600
    train_fraction: float = 0.75
    validation_fraction: float = 0.2
    normalize_inputs: bool | None = None
    rmse_normalized: bool | None = None
    workers: int = 1

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ContractViolation(f"unknown source {self.source!r}")
        if self.source == "csv" and (self.csv_path is None or self.schema is None):
            raise ContractViolation("csv source needs a path and a schema")
        if self.trials < 1:
            raise ContractViolation("trials must be >= 1")
        for name in ("algorithms", "zeta_grid", "lambda_grid", "l_grid"):
            if not len(getattr(self, name)):
                raise ContractViolation(f"{name} must not be empty")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad:
            raise ContractViolation(f"unknown algorithms {bad}")
        if any(not 0.0 <= z <= 1.0 for z in self.zeta_grid):
            raise ContractViolation("zeta values must lie in [0, 1]")
        if self.i_max < 1:
            raise ContractViolation("i_max must be >= 1")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ContractViolation("validation_fraction must lie in [0, 1)")
        object.__setattr__(self, "outlier_mode", OutlierMode(self.outlier_mode))
        synthetic = self.source == "synthetic"
        if self.normalize_inputs is None:
            object.__setattr__(self, "normalize_inputs", not synthetic)
        if self.rmse_normalized is None:
            object.__setattr__(self, "rmse_normalized", not synthetic)

    def cells(self):
        out = []
        for algo in self.algorithms:
            for z in self.zeta_grid:
                if algo in SCN_ALGORITHMS:
                    out.append((algo, float(z), None, int(self.scn.l_max)))
                else:
                    out.extend((algo, float(z), float(lam), int(l))
                               for lam in self.lambda_grid for l in self.l_grid)
        return out

    def to_dict(self):
        d = asdict(self)
        d["outlier_mode"] = self.outlier_mode.value
        d["scn"]["scopes"] = list(self.scn.scopes)
        for k in ("algorithms", "zeta_grid", "lambda_grid", "l_grid", "noise_range"):
            d[k] = list(d[k])
        if self.schema is not None:
            d["schema"] = {"input_cols": list(self.schema.input_cols),
                           "output_cols": list(self.schema.output_cols),
                           "has_header": self.schema.has_header}
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["scn"] = ScnConfig(**{**d["scn"], "scopes": tuple(d["scn"]["scopes"])})
        if d.get("schema") is not None:
            s = d["schema"]
            d["schema"] = CsvSchema(tuple(s["input_cols"]), tuple(s["output_cols"]), s["has_header"])
        for k in ("algorithms", "zeta_grid", "lambda_grid", "l_grid", "noise_range"):
            d[k] = tuple(d[k])
        return cls(**d)


@dataclass(frozen=True)
class CellResult:
    algorithm: str
    zeta: float
    lam: float | None
    l: int
    rmses: tuple = ()
    seeds: tuple = ()
    wall_time: float = 0.0
    status: str = "ok"
    reason: str = ""

    @property
    def trials(self):
        return len(self.rmses)

    @property
    def mean_rmse(self):
        return float(np.mean(self.rmses)) if self.rmses else math.nan

    @property
    def std_rmse(self):
        return float(np.std(self.rmses, ddof=1)) if len(self.rmses) > 1 else math.nan


@dataclass
class ExperimentReport:
    cells: list = field(default_factory=list)
    spec: dict = field(default_factory=dict)
    environment: dict = field(default_factory=dict)

    def cell(self, algorithm, zeta, lam=None, l=None):
        for c in self.cells:
            if (c.algorithm == algorithm and math.isclose(c.zeta, zeta)
                    and (lam is None or c.lam == lam) and (l is None or c.l == l)):
                return c
        raise KeyError((algorithm, zeta, lam, l))


def environment_stamp():
    return {"rscn": __version__, "numpy": np.__version__, "python": platform.python_version(),
            "platform": platform.platform()}


# ---------------------------------------------------------------- trial data

@dataclass(frozen=True)
class TrialData:
    fit: Dataset
    validation: Dataset | None
    test: Dataset
    target_ranges: np.ndarray


def _clean_data(spec, rng):
    if spec.source == "synthetic":
        return generate_synthetic(spec.n_train, spec.n_test, rng)
    if spec.source == "case_study":
        return generate_case_study(spec.n_train, spec.n_test, rng)
    return split(_load_cached(spec.csv_path, spec.schema), spec.train_fraction, rng)


_CSV_CACHE = {}


def _load_cached(path, schema):
    key = (os.path.abspath(path), schema)
    if key not in _CSV_CACHE:
        _CSV_CACHE[key] = load_csv(path, schema)
    return _CSV_CACHE[key]


def prepare_trial(spec, zeta, seed):
    """Build the scaled, split and contaminated data of one trial."""
    rng = np.random.default_rng(seed)
    train, test = _clean_data(spec, rng)
    fr, tr = column_ranges(train.x), column_ranges(train.y)
    if spec.normalize_inputs:
        train, test = normalize(train, fr, tr), normalize(test, fr, tr)
    else:
        train = replace(normalize(train, fr, tr), x=train.x)
        test = replace(normalize(test, fr, tr), x=test.x)
    val = None
    k = int(math.floor(spec.validation_fraction * train.n + 0.5))
    if k and train.n - k >= 1:
        perm = rng.permutation(train.n)
        val = train.subset(np.sort(perm[:k]))
        train = train.subset(np.sort(perm[k:]))
    fit = inject_outliers(train, zeta, spec.noise_range, rng, spec.outlier_mode)
    return TrialData(fit, val, test, tr)


# ---------------------------------------------------------------- learners

def fit_predict(spec, cell, data, seed):
    """Train the learner named by ``cell`` and predict the test inputs."""
    algo, _, lam, l = cell
    rng = np.random.default_rng(seed)
    x, t = data.fit.x, data.fit.y
    if algo == "rsc_kde":
        val = None
        if spec.use_validation and data.validation is not None:
            val = (data.validation.x, data.validation.y)
        cfg = AoConfig(i_max=spec.i_max, inner=spec.scn, validation=val,
                       stop_on_validation_rise=val is not None, warm_start=spec.warm_start,
                       select_nodes_by_validation=val is not None)
        model, _, _ = train_rsc_kde(x, t, cfg, rng)
    elif algo == "scn_plain":
        model, _ = build_round(x, t, None, spec.scn, rng)
    elif algo == "rvfl":
        model = train_rvfl(x, t, RvflConfig(l=l, lam=lam), rng)
    elif algo == "weighted_rvfl":
        model, _ = train_weighted_rvfl(x, t, RvflConfig(l=l, lam=lam, weighted=True,
                                                        ao_rounds=spec.rvfl_ao_rounds), rng)
    else:
        raise ContractViolation(f"unknown algorithm {algo!r}")
    if model.n_nodes == 0:
        return np.zeros_like(data.test.y)
    return forward(model, data.test.x)


def _score(spec, data, pred):
    if spec.rmse_normalized:
        return rmse(pred, data.test.y)
    lo, hi = data.target_ranges[:, 0], data.target_ranges[:, 1]
    return rmse(lo + pred * (hi - lo), lo + data.test.y * (hi - lo))


def run_cell(spec, cell):
    """All trials of one grid cell; the first failing trial fails the cell."""
    algo, zeta, lam, l = cell
    rmses, seeds = [], []
    start = time.perf_counter()
    for trial in range(spec.trials):
        seed = derive_seed(spec.seed_base, "model", algo, zeta, lam, l, trial)
        seeds.append(seed)
        try:
            data = prepare_trial(spec, zeta, derive_seed(spec.seed_base, "data", zeta, trial))
            rmses.append(_score(spec, data, fit_predict(spec, cell, data, seed)))
        except DataError:
            raise
        except (RscnError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
            return CellResult(algo, zeta, lam, l, (), tuple(seeds), time.perf_counter() - start,
                              "failed", f"trial {trial}: {type(exc).__name__}: {exc}")
    return CellResult(algo, zeta, lam, l, tuple(rmses), tuple(seeds), time.perf_counter() - start)


def _sort_key(c):
    return (c.algorithm, c.zeta, -1.0 if c.lam is None else c.lam, c.l)


def run_experiment(spec):
    """Run every cell of ``spec``; results are sorted by (algorithm, zeta, lambda, L)."""
    cells = spec.cells()
    if spec.source == "csv":
        _load_cached(spec.csv_path, spec.schema)  # surface data errors before any training
    if spec.workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(run_cell, [spec] * len(cells), cells))
    else:
        results = [run_cell(spec, c) for c in cells]
    return ExperimentReport(sorted(results, key=_sort_key), spec.to_dict(), environment_stamp())


# ---------------------------------------------------------------- sweeps

@dataclass
class SweepTable:
    """Mean RMSE of RSC-KDE per ``(zeta, nu)`` row and ``L`` column."""

    l_grid: tuple
    nu_grid: tuple
    zeta_grid: tuple
    values: dict = field(default_factory=dict)  # (zeta, nu, L) -> CellResult

    def mean(self, zeta, nu, l):
        return self.values[(float(zeta), int(nu), int(l))].mean_rmse

    def rows(self):
        for z in self.zeta_grid:
            for nu in self.nu_grid:
                yield float(z), int(nu), [self.mean(z, nu, l) for l in self.l_grid]


def robustness_sweep(spec, l_grid, nu_grid):
    """RSC-KDE with exactly ``L`` node attempts and ``nu`` AO rounds.

    No validation split is held out and ``epsilon`` is set to 0, so each
    network grows to ``L`` nodes unless no admissible node exists.
    """
    if not len(l_grid) or not len(nu_grid):
        raise ContractViolation("sweep grids must not be empty")
    table = SweepTable(tuple(int(l) for l in l_grid), tuple(int(n) for n in nu_grid),
                       tuple(float(z) for z in spec.zeta_grid))
    for l in table.l_grid:
        for nu in table.nu_grid:
            sub = replace(spec, algorithms=("rsc_kde",), i_max=nu, use_validation=False,
                          validation_fraction=0.0,
                          scn=replace(spec.scn, l_max=l, epsilon=0.0))
            for c in run_experiment(sub).cells:
                table.values[(c.zeta, nu, l)] = c
    return table


# ---------------------------------------------------------------- emission

def _num(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def report_rows(report):
    for c in report.cells:
        yield [c.algorithm, _num(c.zeta), _num(c.lam), _num(c.l), _num(c.mean_rmse),
               _num(c.std_rmse), str(c.trials), " ".join(str(s) for s in c.seeds), c.status, c.reason]


def report_to_dict(report):
    return {
        "format": "rscn-report",
        "version": 1,
        "spec": report.spec,
        "environment": report.environment,
        "cells": [{"algorithm": c.algorithm, "zeta": c.zeta, "lambda": c.lam, "L": c.l,
                   "mean_rmse": None if not c.rmses else c.mean_rmse,
                   "std_rmse": None if len(c.rmses) < 2 else c.std_rmse,
                   "rmses": list(c.rmses), "seeds": list(c.seeds), "wall_time": c.wall_time,
                   "status": c.status, "reason": c.reason} for c in report.cells],
    }


def report_from_dict(doc):
    if doc.get("format") != "rscn-report":
        raise ContractViolation("not an rscn report")
    cells = [CellResult(c["algorithm"], c["zeta"], c["lambda"], c["L"], tuple(c["rmses"]),
                        tuple(c["seeds"]), c["wall_time"], c["status"], c["reason"])
             for c in doc["cells"]]
    return ExperimentReport(cells, doc["spec"], doc["environment"])


def _write(text, sink):
    if hasattr(sink, "write"):
        sink.write(text)
        return
    try:
        with open(sink, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise DataIOError(f"cannot write {sink}: {exc.strerror}") from exc


def emit_report(report, fmt, sink):
    """Write ``report`` as ``"csv"`` or ``"json"`` to a path or text stream."""
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        w.writerows(report_rows(report))
        text = buf.getvalue()
    elif fmt == "json":
        text = json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n"
    else:
        raise ContractViolation(f"unknown report format {fmt!r}")
    _write(text, sink)


def load_report(source):
    """Inverse of ``emit_report(..., "json", ...)``."""
    if hasattr(source, "read"):
        return report_from_dict(json.load(source))
    try:
        with open(source, encoding="utf-8") as fh:
            return report_from_dict(json.load(fh))
    except OSError as exc:
        raise DataIOError(f"cannot read {source}: {exc.strerror}") from exc


def emit_sweep(table, fmt, sink):
    """Sweep table with one row per ``(zeta, nu)`` and one column per ``L``."""
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["zeta", "nu"] + [f"L={l}" for l in table.l_grid])
        for z, nu, means in table.rows():
            w.writerow([_num(z), str(nu)] + [_num(v) for v in means])
        text = buf.getvalue()
    elif fmt == "json":
        doc = {"format": "rscn-sweep", "version": 1, "l_grid": list(table.l_grid),
               "nu_grid": list(table.nu_grid), "zeta_grid": list(table.zeta_grid),
               "cells": [{"zeta": z, "nu": nu, "L": l, "rmses": list(c.rmses),
                          "mean_rmse": c.mean_rmse if c.rmses else None, "status": c.status,
                          "reason": c.reason}
                         for (z, nu, l), c in sorted(table.values.items())]}
        text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    else:
        raise ContractViolation(f"unknown report format {fmt!r}")
    _write(text, sink)
