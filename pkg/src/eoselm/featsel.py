"""Feature-subset scoring with a kernelized fuzzy-rough separability measure,
and subset search by binary Jaya or exhaustive enumeration.

The separability of a subset ``B`` is built from a Gaussian similarity
``k(x, y) = exp(-|x_B - y_B|^2 / (2 sigma^2))`` between samples:

* dependency: mean over samples of the fuzzy lower-approximation membership
  ``min over opposite-class y of (1 - k(x, y))``;
* certainty: mean over samples of ``1 - max over opposite-class y != x of
  k(x, y)``.

The criterion averages the two. The subset objective (minimized) is
``-criterion + w * |B| / |A|``.

These are surrogates of the kernelized fuzzy-rough functions used in the
TSA literature, not reproductions of them.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist

from eoselm import jaya
from eoselm.errors import ConfigurationError, InputError

DEFAULT_SIGMA = 0.2
DEFAULT_WEIGHT = 0.1
MAX_BRUTE_FORCE = 12


@dataclass(frozen=True)
class ClassificationTable:
    """Samples ``X`` (rows, features scaled to [0, 1]) with +/-1 labels ``y``."""

    X: np.ndarray
    y: np.ndarray
    names: tuple[str, ...] = ()

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y).reshape(-1)
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise InputError(f"X {X.shape} and y {y.shape} disagree")
        if X.shape[0] < 2 or len(set(y.tolist())) != 2 or not set(y.tolist()) <= {1, -1}:
            raise InputError("need at least two samples and both classes (+1 and -1)")
        if np.any(X < -1e-12) or np.any(X > 1 + 1e-12):
            raise InputError("features must be normalized to [0, 1]")
        names = tuple(self.names) or tuple(f"f{i + 1}" for i in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise InputError("one name per feature column required")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y.astype(int))
        object.__setattr__(self, "names", names)

    @property
    def n_features(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class SubsetFitness:
    g_C: float
    dim_penalty: float
    total: float


def _columns(table: ClassificationTable, subset) -> np.ndarray:
    idx = np.asarray(subset)
    if idx.dtype == bool:
        if idx.shape != (table.n_features,):
            raise InputError("boolean mask must have one entry per feature")
        idx = np.flatnonzero(idx)
    if idx.size == 0:
        raise ConfigurationError("feature subset must not be empty")
    return idx.astype(int)


def similarity(table: ClassificationTable, subset, sigma: float) -> np.ndarray:
    if sigma <= 0:
        raise ConfigurationError("sigma must be positive")
    Xb = table.X[:, _columns(table, subset)]
    return np.exp(-cdist(Xb, Xb, "sqeuclidean") / (2.0 * sigma**2))


def _opposite(table: ClassificationTable) -> np.ndarray:
    return table.y[:, None] != table.y[None, :]


def _exact_mean(v: np.ndarray) -> float:
    # correctly rounded sum, so the result does not depend on sample order
    return math.fsum(v.tolist()) / v.size


def kfrs_dependency(table: ClassificationTable, subset, sigma: float = DEFAULT_SIGMA) -> float:
    """Mean fuzzy lower-approximation membership, in [0, 1]."""
    K = similarity(table, subset, sigma)
    mu = np.min(np.where(_opposite(table), 1.0 - K, np.inf), axis=1)
    return _exact_mean(mu)


def kfrs_certainty(table: ClassificationTable, subset, sigma: float = DEFAULT_SIGMA) -> float:
    K = similarity(table, subset, sigma)
    mask = _opposite(table) & ~np.eye(len(table.y), dtype=bool)
    nearest = np.max(np.where(mask, K, -np.inf), axis=1)
    return _exact_mean(1.0 - nearest)


def kfrs_criterion(table: ClassificationTable, subset, sigma: float = DEFAULT_SIGMA) -> float:
    return 0.5 * (kfrs_dependency(table, subset, sigma) + kfrs_certainty(table, subset, sigma))


def subset_fitness(
    table: ClassificationTable, mask, sigma: float = DEFAULT_SIGMA, w: float = DEFAULT_WEIGHT
) -> SubsetFitness:
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        return SubsetFitness(0.0, 0.0, float("inf"))
    g = kfrs_criterion(table, mask, sigma)
    penalty = w * mask.sum() / table.n_features
    return SubsetFitness(g, penalty, -g + penalty)


class FitnessCache:
    """Memoized :func:`subset_fitness` keyed by bitmask; safe for threads."""

    def __init__(self, table: ClassificationTable, sigma: float = DEFAULT_SIGMA, w: float = DEFAULT_WEIGHT):
        self.table, self.sigma, self.w = table, sigma, w
        self._store: dict[bytes, SubsetFitness] = {}
        self._lock = threading.Lock()

    def __call__(self, mask) -> SubsetFitness:
        key = np.packbits(np.asarray(mask, dtype=bool)).tobytes() + bytes([len(mask) % 8])
        with self._lock:
            hit = self._store.get(key)
        if hit is None:
            hit = subset_fitness(self.table, mask, self.sigma, self.w)
            with self._lock:
                self._store[key] = hit
        return hit

    def objective(self, mask) -> float:
        return self(mask).total

    def __len__(self) -> int:
        return len(self._store)


@dataclass
class SelectionResult:
    mask: np.ndarray
    features: list[str]
    fitness: SubsetFitness
    history: list[float] = field(default_factory=list)
    search: jaya.BinJayaResult | None = None

    @property
    def indices(self) -> list[int]:
        return np.flatnonzero(self.mask).tolist()


def select_features(
    table: ClassificationTable,
    config: jaya.JayaConfig | None = None,
    sigma: float = DEFAULT_SIGMA,
    w: float = DEFAULT_WEIGHT,
    map_fn=map,
) -> SelectionResult:
    """Search feature subsets with BinJaya; the returned subset is never empty."""
    config = config or jaya.binjaya_config(pop_size=20, max_iters=100)
    cache = FitnessCache(table, sigma, w)
    res = jaya.binjaya_run(config, cache.objective, table.n_features, map_fn)
    mask = res.bits
    if not mask.any():
        # every candidate decoded to an empty subset; fall back to the best single feature
        singles = [np.eye(table.n_features, dtype=bool)[i] for i in range(table.n_features)]
        mask = min(singles, key=cache.objective)
    return SelectionResult(mask, [table.names[i] for i in np.flatnonzero(mask)], cache(mask), res.history, res)


def brute_force_best_subset(
    table: ClassificationTable, sigma: float = DEFAULT_SIGMA, w: float = DEFAULT_WEIGHT
) -> SelectionResult:
    """Exhaustive minimum of the subset objective (at most 12 features)."""
    d = table.n_features
    if d > MAX_BRUTE_FORCE:
        raise ConfigurationError(f"brute force limited to {MAX_BRUTE_FORCE} features, table has {d}")
    best_mask, best = None, None
    for code in range(1, 2**d):
        mask = np.array([(code >> i) & 1 for i in range(d)], dtype=bool)
        fit = subset_fitness(table, mask, sigma, w)
        if best is None or fit.total < best.total:
            best_mask, best = mask, fit
    return SelectionResult(best_mask, [table.names[i] for i in np.flatnonzero(best_mask)], best)


def write_selection_report(result: SelectionResult, path, trace_path: str | None = None) -> None:
    doc = {
        "features": result.features,
        "indices": result.indices,
        "size": len(result.features),
        "g_C": result.fitness.g_C,
        "dim_penalty": result.fitness.dim_penalty,
        "fitness": result.fitness.total,
        "trace": trace_path,
    }
    if result.search is not None:
        doc["angle_params"] = list(result.search.params)
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def table_from_arrays(X, y, names: Sequence[str] = ()) -> ClassificationTable:
    return ClassificationTable(np.asarray(X, dtype=float), np.asarray(y), tuple(names))
