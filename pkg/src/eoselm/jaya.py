"""Jaya population optimizer and its angle-modulated binary variant.

Jaya moves every candidate toward the current best solution and away from the
current worst one, accepting a move only when it strictly improves the
objective. The binary variant searches the four coefficients of a sin/cos
generating function and reads a bitstring off the sign of that function on an
even grid.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from eoselm.errors import ConfigurationError


@dataclass(frozen=True)
class JayaConfig:
    pop_size: int = 20
    dims: int = 1
    lower: float | Sequence[float] = -1.0
    upper: float | Sequence[float] = 1.0
    max_iters: int = 100
    seed: int | None = 0
    target_tolerance: float | None = None

    def __post_init__(self):
        if self.pop_size < 2:
            raise ConfigurationError("Jaya needs at least two candidates")
        if self.dims < 1 or self.max_iters < 0:
            raise ConfigurationError(f"bad dims={self.dims} or max_iters={self.max_iters}")
        lo, hi = self.bounds()
        if np.any(lo >= hi):
            raise ConfigurationError("every lower bound must be below its upper bound")

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.broadcast_to(np.asarray(self.lower, dtype=float), (self.dims,)).copy()
        hi = np.broadcast_to(np.asarray(self.upper, dtype=float), (self.dims,)).copy()
        return lo, hi


@dataclass(frozen=True)
class Candidate:
    x: np.ndarray
    f: float


@dataclass
class JayaResult:
    best: Candidate
    history: list[float] = field(default_factory=list)  # best f after each iteration
    trace: list[tuple[int, float, float, float]] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.history)


def _safe_eval(objective: Callable, X: np.ndarray, map_fn=map, vectorized: bool = False) -> np.ndarray:
    if vectorized:
        f = np.array(objective(X), dtype=float).reshape(len(X))
    else:
        f = np.fromiter(map_fn(objective, list(X)), dtype=float, count=len(X))
    bad = ~np.isfinite(f)
    if bad.any():
        f[bad] = np.inf
    return f


def jaya_step(
    X: np.ndarray,
    f: np.ndarray,
    objective: Callable,
    rng: np.random.Generator,
    lower: np.ndarray,
    upper: np.ndarray,
    r: tuple[np.ndarray, np.ndarray] | None = None,
    map_fn=map,
    vectorized: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """One synchronous sweep over the population.

    ``r1`` and ``r2`` are drawn per dimension and shared by all candidates in
    the sweep; ``r`` overrides them (used in tests).
    """
    best = X[f.argmin()]
    worst = X[f.argmax()]
    if r is None:
        r1, r2 = rng.random((2, X.shape[1]))  # same stream as two draws of size dims
    else:
        r1, r2 = (np.asarray(v, dtype=float) for v in r)
    absX = np.abs(X)
    proposal = X + r1 * (best - absX) - r2 * (worst - absX)
    np.maximum(proposal, lower, out=proposal)
    np.minimum(proposal, upper, out=proposal)
    f_new = _safe_eval(objective, proposal, map_fn, vectorized)
    accept = f_new < f
    X = X.copy()
    X[accept] = proposal[accept]
    f = np.where(accept, f_new, f)
    return X, f


def _row(i: int, f: np.ndarray) -> tuple[int, float, float, float]:
    lo, hi = float(f.min()), float(f.max())
    if hi < np.inf:
        return i, lo, float(f.mean()), hi
    finite = f[np.isfinite(f)]
    return i, lo, float(finite.mean()) if finite.size else float("inf"), hi


def jaya_run(config: JayaConfig, objective: Callable, map_fn=map, vectorized: bool = False) -> JayaResult:
    """Run Jaya to ``max_iters`` or until the best value reaches ``target_tolerance``.

    With ``vectorized`` the objective takes the whole (pop_size, dims)
    population and returns one value per row; ``map_fn`` is then unused.
    """
    rng = np.random.default_rng(config.seed)
    lo, hi = config.bounds()
    X = rng.uniform(lo, hi, size=(config.pop_size, config.dims))
    f = _safe_eval(objective, X, map_fn, vectorized)
    result = JayaResult(Candidate(X[np.argmin(f)].copy(), float(f.min())))
    result.trace.append(_row(0, f))
    for i in range(1, config.max_iters + 1):
        if config.target_tolerance is not None and f.min() <= config.target_tolerance:
            break
        X, f = jaya_step(X, f, objective, rng, lo, hi, map_fn=map_fn, vectorized=vectorized)
        row = _row(i, f)
        result.history.append(row[1])
        result.trace.append(row)
    k = int(np.argmin(f))
    result.best = Candidate(X[k].copy(), float(f[k]))
    return result


def write_trace(result: JayaResult, path) -> None:
    """Convergence trace as CSV: ``iter,best_f,mean_f,worst_f``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iter", "best_f", "mean_f", "worst_f"])
        for i, b, m, wst in result.trace:
            w.writerow([i, f"{b:.9g}", f"{m:.9g}", f"{wst:.9g}"])


# -- angle modulation --------------------------------------------------------


class AngleModParams(NamedTuple):
    o: float  # horizontal shift
    p: float  # frequency scale of the sin term
    r: float  # frequency of the cos term
    s: float  # vertical shift


def generating_function(params, y) -> np.ndarray:
    o, p, r, s = params
    y = np.asarray(y, dtype=float)
    return np.sin(2 * np.pi * (y - o) * p * np.cos(2 * np.pi * r * (y - o))) + s


def angle_modulate(params, n_bits: int) -> np.ndarray:
    """Bitstring (bool array) with ``bit_j = g(j / n_bits) > 0``."""
    if n_bits < 1:
        raise ConfigurationError("n_bits must be positive")
    return generating_function(params, np.arange(n_bits) / n_bits) > 0.0


@dataclass
class BinJayaResult:
    bits: np.ndarray
    params: AngleModParams
    f: float
    history: list[float]
    jaya: JayaResult


def binjaya_run(
    config: JayaConfig, bit_objective: Callable[[np.ndarray], float], n_bits: int, map_fn=map
) -> BinJayaResult:
    """Continuous Jaya over ``(o, p, r, s)``; fitness is the objective of the decoded bits."""
    if config.dims != 4:
        raise ConfigurationError("BinJaya optimizes exactly four generating-function coefficients")
    res = jaya_run(config, lambda v: bit_objective(angle_modulate(v, n_bits)), map_fn)
    params = AngleModParams(*(float(v) for v in res.best.x))
    return BinJayaResult(angle_modulate(params, n_bits), params, res.best.f, res.history, res)


def binjaya_config(**kw) -> JayaConfig:
    """JayaConfig with BinJaya defaults (4 dims on ``[-1, 1]``)."""
    kw.setdefault("dims", 4)
    kw.setdefault("lower", -1.0)
    kw.setdefault("upper", 1.0)
    return JayaConfig(**kw)
