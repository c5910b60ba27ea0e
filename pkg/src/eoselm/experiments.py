"""Experiment protocol: repeated trials, model selection, feature-subset
comparison, the deployable model and streaming prediction.

Accuracies and subsets are deterministic in (config, seed). Wall-clock
timings are measured here but kept out of the CSV tables the CLI writes.
"""

from __future__ import annotations

import csv
import json
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from eoselm import baselines, ensemble, featsel, features, jaya, oselm
from eoselm.config import ExperimentConfig
from eoselm.errors import ConfigurationError, InputError

METHODS = ("oselm", "eoselm", "sgbp")
CSV_FLOAT = repr  # shortest round-trip form, so aggregates can be recomputed exactly


@dataclass(frozen=True)
class Dataset:
    X_train: np.ndarray
    y_train: np.ndarray
    X_test: np.ndarray
    y_test: np.ndarray

    @classmethod
    def from_kb(cls, kb, columns=None) -> "Dataset":
        Xtr, ytr = kb.part("train")
        Xte, yte = kb.part("test")
        if columns is not None:
            Xtr, Xte = Xtr[:, columns], Xte[:, columns]
        return cls(Xtr, ytr, Xte, yte)


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    seed: int
    train_accuracy: float
    test_accuracy: float
    init_time: float = 0.0  # seconds; initial phase (0 for SGBP)
    train_time: float = 0.0  # seconds; sequential phase


@dataclass
class TrialReport:
    method: str
    records: list[TrialRecord] = field(default_factory=list)

    def _values(self, name: str) -> list[float]:
        if not self.records:
            raise InputError(f"{self.method}: no trials recorded")
        return [getattr(r, name) for r in self.records]

    def mean(self, name: str) -> float:
        """Exact mean of the recorded floats, rounded once."""
        vals = self._values(name)
        return float(sum(map(Fraction, vals)) / len(vals))

    def sd(self, name: str) -> float:
        """Population standard deviation over trials."""
        return statistics.pstdev(self._values(name))

    def summary(self) -> dict:
        return {
            "method": self.method,
            "trials": len(self.records),
            "train_mean": self.mean("train_accuracy"),
            "train_sd": self.sd("train_accuracy"),
            "test_mean": self.mean("test_accuracy"),
            "test_sd": self.sd("test_accuracy"),
            "init_time_mean": self.mean("init_time"),
            "train_time_mean": self.mean("train_time"),
        }


def trial_seeds(seed: int, trials: int) -> list[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence([seed, 7]).spawn(trials)]


def accuracy(pred, y) -> float:
    return float(np.mean(np.asarray(pred) == np.asarray(y))) if len(y) else 0.0


# -- single trials ------------------------------------------------------------


@dataclass(frozen=True)
class TrialSpec:
    method: str
    L: int = 20
    n0: int | None = None
    K: int = 10
    N: int | None = None
    activation: str = "sigmoid"
    mode: str = "one-by-one"
    chunk_size: int = 1
    sgbp_hidden: int = 30
    sgbp_lr: float = 0.05
    sgbp_epochs: int = 1

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigurationError(f"unknown method {self.method!r}")

    @property
    def initial_rows(self) -> int:
        return self.L + 50 if self.n0 is None else self.n0

    @classmethod
    def from_config(cls, method: str, cfg: ExperimentConfig, L: int | None = None) -> "TrialSpec":
        m, s = cfg.model, cfg.sgbp
        return cls(method, L or m.L, m.n0, m.K, m.N, m.activation, m.mode, m.chunk_size, s.hidden, s.lr, s.epochs)


def fit_model(spec: TrialSpec, X, y, seed: int):
    """Train one model; returns ``(model, init_seconds, sequential_seconds)``."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if spec.method == "sgbp":
        t0 = time.perf_counter()
        net = baselines.fit_sgbp(
            baselines.SgbpConfig(spec.sgbp_hidden, spec.sgbp_lr, spec.sgbp_epochs, seed), X, y
        )
        return net, 0.0, time.perf_counter() - t0
    n0 = spec.initial_rows
    if n0 > len(X):
        raise ConfigurationError(f"initial phase needs {n0} rows, only {len(X)} available")
    if spec.method == "oselm":
        t0 = time.perf_counter()
        state = oselm.init_phase(oselm.init_hidden(X.shape[1], spec.L, spec.activation, seed), X[:n0], y[:n0])
        t1 = time.perf_counter()
        if spec.mode == "one-by-one":
            for i in range(n0, len(X)):
                state = oselm.update_one(state, X[i], y[i])
        else:
            for start in range(n0, len(X), spec.chunk_size):
                state = oselm.update_chunk(state, X[start : start + spec.chunk_size], y[start : start + spec.chunk_size])
        return state, t1 - t0, time.perf_counter() - t1
    cfg = ensemble.EnsembleConfig(spec.K, spec.N, spec.L, n0, seed, spec.activation)
    t0 = time.perf_counter()
    ens = ensemble.init_ensemble(cfg, X[:n0], y[:n0])
    t1 = time.perf_counter()
    ens = ensemble.train(ens, X[n0:], y[n0:])
    return ens, t1 - t0, time.perf_counter() - t1


def predict_model(method: str, model, X) -> np.ndarray:
    if method == "sgbp":
        return baselines.predict_labels(model, X)
    if method == "oselm":
        return oselm.predict_labels(model, X)
    return ensemble.predict_strong_labels(model, X)


def run_trial(spec: TrialSpec, data: Dataset, trial: int, seed: int, keep_model: bool = False):
    model, t_init, t_seq = fit_model(spec, data.X_train, data.y_train, seed)
    rec = TrialRecord(
        trial,
        seed,
        accuracy(predict_model(spec.method, model, data.X_train), data.y_train),
        accuracy(predict_model(spec.method, model, data.X_test), data.y_test),
        t_init,
        t_seq,
    )
    return (rec, model) if keep_model else rec


def _trial_job(args):
    return run_trial(*args)


def run_trials(
    spec: TrialSpec, data: Dataset, seeds: list[int], workers: int = 1, keep_models: bool = False
) -> tuple[TrialReport, list]:
    """One trial per seed; results are ordered by trial regardless of ``workers``."""
    jobs = [(spec, data, i, s, keep_models) for i, s in enumerate(seeds)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            out = list(pool.map(_trial_job, jobs))
    else:
        out = [_trial_job(j) for j in jobs]
    if keep_models:
        return TrialReport(spec.method, [r for r, _ in out]), [m for _, m in out]
    return TrialReport(spec.method, out), []


# -- model selection ------------------------------------------------------------


@dataclass(frozen=True)
class CurvePoint:
    L: int
    mean_accuracy: float
    sd_accuracy: float
    n_folds: int


def cv_folds(n: int, k: int, seed: int, repeat: int) -> list[np.ndarray]:
    order = np.random.default_rng(np.random.SeedSequence([seed, 11, repeat])).permutation(n)
    return np.array_split(order, k)


def model_select(
    X,
    y,
    L_grid: Iterable[int],
    folds: int = 5,
    repeats: int = 1,
    seed: int = 0,
    method: str = "oselm",
    activation: str = "sigmoid",
    mode: str = "one-by-one",
    chunk_size: int = 1,
) -> tuple[int, list[CurvePoint]]:
    """k-fold validation accuracy per hidden-layer size; best is the highest mean,
    ties going to the smallest ``L``. Sizes whose initial phase (``L + 50`` rows)
    does not fit in a training fold are skipped."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    grid = sorted(set(int(L) for L in L_grid))
    if not grid:
        raise ConfigurationError("empty L grid")
    splits = []
    for r in range(repeats):
        parts = cv_folds(len(X), folds, seed, r)
        for f in range(folds):
            splits.append((np.concatenate([p for j, p in enumerate(parts) if j != f]), parts[f], r, f))
    curve = []
    for L in grid:
        spec = TrialSpec(method, L=L, activation=activation, mode=mode, chunk_size=chunk_size)
        if any(len(tr) < spec.initial_rows for tr, _, _, _ in splits):
            continue
        accs = []
        for tr, va, r, f in splits:
            s = int(np.random.SeedSequence([seed, 13, L, r, f]).generate_state(1)[0])
            model, _, _ = fit_model(spec, X[tr], y[tr], s)
            accs.append(accuracy(predict_model(method, model, X[va]), y[va]))
        curve.append(CurvePoint(L, statistics.fmean(accs), statistics.pstdev(accs), len(accs)))
    if not curve:
        raise ConfigurationError(f"no L in {grid} fits folds of the {len(X)}-row training split")
    best = max(curve, key=lambda p: (p.mean_accuracy, -p.L))
    return best.L, curve


# -- feature selection -------------------------------------------------------------


@dataclass
class SubsetComparison:
    selection: featsel.SelectionResult
    full: TrialReport
    subset: TrialReport


def select_subset(kb, cfg: ExperimentConfig, w: float | None = None, map_fn=map) -> featsel.SelectionResult:
    """BinJaya search on the scaled training split."""
    X, y = kb.part("train")
    table = featsel.ClassificationTable(X, y.astype(int), tuple(kb.feature_names))
    f = cfg.featsel
    jc = jaya.binjaya_config(pop_size=f.pop_size, max_iters=f.max_iters, seed=cfg.seed, lower=f.lower, upper=f.upper)
    return featsel.select_features(table, jc, f.sigma, f.w if w is None else w, map_fn)


def compare_subset(kb, cfg: ExperimentConfig, L: int | None = None, workers: int = 1) -> SubsetComparison:
    sel = select_subset(kb, cfg)
    spec = TrialSpec.from_config("eoselm", cfg, L)
    seeds = trial_seeds(cfg.seed, cfg.trials)
    full, _ = run_trials(spec, Dataset.from_kb(kb), seeds, workers)
    sub, _ = run_trials(spec, Dataset.from_kb(kb, sel.indices), seeds, workers)
    return SubsetComparison(sel, full, TrialReport("eoselm-subset", sub.records))


# -- deployable model ---------------------------------------------------------------


@dataclass
class TsaModel:
    """Scaling, feature subset and trained ensemble: raw features in, label out."""

    ensemble: ensemble.BoostEnsemble
    scaling: features.Scaling
    columns: list[int]
    feature_names: tuple[str, ...] = features.FEATURE_NAMES

    @property
    def input_names(self) -> list[str]:
        return [self.feature_names[i] for i in self.columns]

    def transform(self, raw) -> np.ndarray:
        Z = self.scaling.transform(np.atleast_2d(np.asarray(raw, dtype=float)), clip=features.TEST_CLIP)
        return Z[:, self.columns]

    def predict(self, raw) -> np.ndarray:
        return ensemble.predict_strong_labels(self.ensemble, self.transform(raw))

    def to_dict(self) -> dict:
        return {
            "kind": "tsa-model",
            "feature_names": list(self.feature_names),
            "columns": self.columns,
            "scaling": self.scaling.to_dict(),
            "ensemble": ensemble.ensemble_to_dict(self.ensemble),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TsaModel":
        if doc.get("kind") != "tsa-model":
            raise InputError("not a model file")
        return cls(
            ensemble.ensemble_from_dict(doc["ensemble"]),
            features.Scaling.from_dict(doc["scaling"]),
            [int(c) for c in doc["columns"]],
            tuple(doc["feature_names"]),
        )


def save_model(model: TsaModel, path) -> None:
    Path(path).write_text(json.dumps(model.to_dict()) + "\n")


def load_model(path) -> TsaModel:
    try:
        return TsaModel.from_dict(json.loads(Path(path).read_text()))
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(f"{path}: bad model file ({exc})") from None


def best_trial(report: TrialReport) -> int:
    """Index of the highest training accuracy; ties go to the earliest trial."""
    accs = [r.train_accuracy for r in report.records]
    return accs.index(max(accs))


def online_update(model: TsaModel, raw, labels) -> TsaModel:
    """Continue sequential learning on newly labeled cases, without retraining."""
    y = np.asarray(labels, dtype=float).reshape(-1)
    ens = ensemble.train(model.ensemble, model.transform(raw), y)
    return TsaModel(ens, model.scaling, model.columns, model.feature_names)


# -- streaming prediction -------------------------------------------------------


def read_feature_rows(fh, names: Iterable[str]) -> Iterator[np.ndarray]:
    """Yield the named columns of each CSV row, in ``names`` order.

    Extra columns (ids, labels, split) are ignored, so a knowledge-base file
    can be fed directly.
    """
    reader = csv.reader(fh)
    header = next(reader, None)
    if header is None:
        return
    names = list(names)
    missing = [n for n in names if n not in header]
    if missing:
        raise InputError(f"input is missing feature column(s): {', '.join(missing)}")
    idx = [header.index(n) for n in names]
    for k, row in enumerate(reader, start=2):
        if not row:
            continue
        try:
            yield np.array([float(row[i]) for i in idx])
        except (ValueError, IndexError):
            raise InputError(f"line {k}: bad feature row") from None


def stream_predict(model: TsaModel, rows: Iterable[np.ndarray]) -> Iterator[tuple[int, float]]:
    """One label per incoming row, with the per-row latency in seconds."""
    for x in rows:
        t0 = time.perf_counter()
        label = int(model.predict(x)[0])
        yield label, time.perf_counter() - t0


def latency_stats(latencies: list[float]) -> dict:
    if not latencies:
        return {"rows": 0}
    a = np.asarray(latencies) * 1e3
    return {
        "rows": len(a),
        "median_ms": float(np.median(a)),
        "p95_ms": float(np.percentile(a, 95)),
        "max_ms": float(a.max()),
    }


# -- report tables -----------------------------------------------------------------


def write_trials_csv(reports: list[TrialReport], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "trial", "seed", "train_accuracy", "test_accuracy"])
        for rep in reports:
            for r in rep.records:
                w.writerow([rep.method, r.trial, r.seed, CSV_FLOAT(r.train_accuracy), CSV_FLOAT(r.test_accuracy)])


def write_aggregates_csv(reports: list[TrialReport], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "trials", "train_mean", "train_sd", "test_mean", "test_sd"])
        for rep in reports:
            s = rep.summary()
            w.writerow([rep.method, s["trials"]] + [CSV_FLOAT(s[k]) for k in ("train_mean", "train_sd", "test_mean", "test_sd")])


def read_trials_csv(path) -> dict[str, list[dict]]:
    out: dict[str, list[dict]] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.setdefault(row["method"], []).append(row)
    return out


def write_curve_csv(curve: list[CurvePoint], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["L", "mean_accuracy", "sd_accuracy", "folds"])
        for p in curve:
            w.writerow([p.L, CSV_FLOAT(p.mean_accuracy), CSV_FLOAT(p.sd_accuracy), p.n_folds])
