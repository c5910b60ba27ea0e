"""Online boosting over a pool of OS-ELM weak classifiers (EOS-ELM).

A shared pool of ``K`` OS-ELMs with independently drawn hidden layers is
watched by a chain of ``N`` selectors. Each selector keeps, for every weak
classifier, the importance mass of samples it got right and wrong; it
delegates to the classifier with the lowest weighted error and votes with
weight ``alpha = 0.5 * ln((1 - e) / e)``. The sample importance ``lambda``
is rescaled after every selector, AdaBoost style, and handed down the chain.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from eoselm import oselm
from eoselm.errors import ConfigurationError, InputError, PreconditionError

ERROR_CLAMP = 1e-4
COUNTER_PRIOR = 1e-3
LAMBDA_RANGE = (1e-6, 1e6)


@dataclass(frozen=True)
class EnsembleConfig:
    K: int = 10
    N: int | None = None  # defaults to K
    L: int = 65
    n0: int | None = None  # defaults to L + 50
    seed: int = 0
    activation: str = "sigmoid"
    poisson: bool = False

    def __post_init__(self):
        if self.N is None:
            object.__setattr__(self, "N", self.K)
        if self.n0 is None:
            object.__setattr__(self, "n0", self.L + 50)
        if self.K < 1 or self.N < 1:
            raise ConfigurationError(f"need K >= 1 and N >= 1, got K={self.K}, N={self.N}")
        if self.n0 < self.L:
            raise ConfigurationError(f"n0={self.n0} is smaller than L={self.L}")


@dataclass(frozen=True)
class BoostEnsemble:
    """Trained ensemble state. ``lam_correct``/``lam_wrong`` have shape (N, K)."""

    config: EnsembleConfig
    pool: tuple[oselm.OselmState, ...]
    lam_correct: np.ndarray
    lam_wrong: np.ndarray
    chosen: np.ndarray
    alpha: np.ndarray
    n_seen: int = 0
    rng_state: dict | None = field(default=None, compare=False)

    def errors(self) -> np.ndarray:
        """Estimated error ``e[n, m]`` of weak classifier m under selector n."""
        return self.lam_wrong / (self.lam_wrong + self.lam_correct)


def weak_seeds(seed: int, K: int) -> list[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(K)]


def init_ensemble(config: EnsembleConfig, X0, T0) -> BoostEnsemble:
    """Initialise ``K`` weak OS-ELMs on ``D0`` and reset all selectors."""
    X0 = np.asarray(X0, dtype=float)
    pool = tuple(
        oselm.init_phase(oselm.init_hidden(X0.shape[1], config.L, config.activation, s), X0, T0)
        for s in weak_seeds(config.seed, config.K)
    )
    shape = (config.N, config.K)
    rng_state = np.random.default_rng(config.seed).bit_generator.state if config.poisson else None
    return BoostEnsemble(
        config,
        pool,
        np.full(shape, COUNTER_PRIOR),
        np.full(shape, COUNTER_PRIOR),
        np.zeros(config.N, dtype=int),
        np.zeros(config.N),
        0,
        rng_state,
    )


def alpha_from_error(e: float) -> float:
    e = min(max(e, ERROR_CLAMP), 1.0 - ERROR_CLAMP)
    return 0.5 * math.log((1.0 - e) / e)


def _clamp_lambda(lam: float) -> float:
    if not math.isfinite(lam):
        warnings.warn(f"importance became {lam}, clamping", RuntimeWarning, stacklevel=3)
        return LAMBDA_RANGE[1] if lam > 0 else LAMBDA_RANGE[0]
    return min(max(lam, LAMBDA_RANGE[0]), LAMBDA_RANGE[1])


def weak_labels(pool, X) -> np.ndarray:
    """Labels of every weak classifier, shape (K, n)."""
    return np.stack([oselm.predict_labels(w, X) for w in pool])


def train_sample(ens: BoostEnsemble, x, t) -> BoostEnsemble:
    """Pass one labelled sample down the selector chain, then update the pool.

    Correctness is judged with each weak classifier's prediction *before*
    it sees the sample, so the counters track prequential error.
    """
    x = np.asarray(x, dtype=float).reshape(1, -1)
    t = float(np.asarray(t).reshape(-1)[0])
    if t not in (1.0, -1.0):
        raise InputError(f"target must be +1 or -1, got {t}")
    correct = weak_labels(ens.pool, x)[:, 0] == t

    lc = ens.lam_correct.copy()
    lw = ens.lam_wrong.copy()
    chosen = ens.chosen.copy()
    alpha = ens.alpha.copy()
    lam = 1.0
    lams = np.empty(ens.config.N)
    for n in range(ens.config.N):
        lams[n] = lam
        lc[n, correct] += lam
        lw[n, ~correct] += lam
        e = lw[n] / (lw[n] + lc[n])
        m = int(np.argmin(e))
        chosen[n] = m
        e_n = min(max(float(e[m]), ERROR_CLAMP), 1.0 - ERROR_CLAMP)
        alpha[n] = alpha_from_error(e_n)
        lam = lam / (2.0 * (1.0 - e_n)) if correct[m] else lam / (2.0 * e_n)
        lam = _clamp_lambda(lam)

    rng_state = ens.rng_state
    if ens.config.poisson:
        # each weak classifier gets Poisson(mean importance) repeated updates
        rng = np.random.default_rng()
        rng.bit_generator.state = rng_state
        repeats = rng.poisson(lams.mean(), size=ens.config.K)
        rng_state = rng.bit_generator.state
    else:
        repeats = np.ones(ens.config.K, dtype=int)
    pool = []
    for w, r in zip(ens.pool, repeats):
        for _ in range(int(r)):
            w = oselm.update_one(w, x, t)
        pool.append(w)
    return replace(
        ens,
        pool=tuple(pool),
        lam_correct=lc,
        lam_wrong=lw,
        chosen=chosen,
        alpha=alpha,
        n_seen=ens.n_seen + 1,
        rng_state=rng_state,
    )


def train(ens: BoostEnsemble, X, T) -> BoostEnsemble:
    for x, t in zip(np.asarray(X, dtype=float), np.asarray(T, dtype=float)):
        ens = train_sample(ens, x, t)
    return ens


def fit(config: EnsembleConfig, X, T) -> BoostEnsemble:
    """Initial phase on the first ``n0`` rows, boosting over the remainder."""
    X = np.asarray(X, dtype=float)
    T = np.asarray(T, dtype=float)
    ens = init_ensemble(config, X[: config.n0], T[: config.n0])
    return train(ens, X[config.n0 :], T[config.n0 :])


def strong_margin(ens: BoostEnsemble, X) -> np.ndarray:
    """``sum_n alpha_n * h_n^sel(x)`` for a batch of inputs."""
    if ens.n_seen < 1:
        raise PreconditionError("ensemble has not seen any boosting sample yet")
    labels = weak_labels(ens.pool, X)
    return ens.alpha @ labels[ens.chosen]


def predict_strong(ens: BoostEnsemble, x) -> tuple[float, int]:
    margin = float(strong_margin(ens, np.asarray(x, dtype=float).reshape(1, -1))[0])
    return margin, 1 if margin >= 0.0 else -1


def predict_strong_labels(ens: BoostEnsemble, X) -> np.ndarray:
    return oselm.sign_label(strong_margin(ens, X))


def ensemble_mode_average(pool, x) -> tuple[float, int]:
    """Plain averaging of the pool's raw scores (the non-boosted variant)."""
    score = float(average_scores(pool, np.asarray(x, dtype=float).reshape(1, -1))[0])
    return score, 1 if score >= 0.0 else -1


def average_scores(pool, X) -> np.ndarray:
    return np.mean([oselm.scores(w, X)[:, 0] for w in pool], axis=0)


def fit_average(config: EnsembleConfig, X, T, mode: str = "one-by-one", chunk_size: int = 1):
    """Train the pool as plain independent OS-ELMs (averaging ablation)."""
    X = np.asarray(X, dtype=float)
    return tuple(
        oselm.fit_sequential(
            oselm.init_hidden(X.shape[1], config.L, config.activation, s), X, T, config.n0, mode, chunk_size
        )
        for s in weak_seeds(config.seed, config.K)
    )


# -- serialization ----------------------------------------------------------


def ensemble_to_dict(ens: BoostEnsemble) -> dict:
    return {
        "kind": "eoselm",
        "config": asdict(ens.config),
        "pool": [oselm.state_to_dict(w) for w in ens.pool],
        "lam_correct": ens.lam_correct.tolist(),
        "lam_wrong": ens.lam_wrong.tolist(),
        "chosen": ens.chosen.tolist(),
        "alpha": ens.alpha.tolist(),
        "n_seen": ens.n_seen,
        "rng_state": ens.rng_state,
    }


def ensemble_from_dict(doc: dict) -> BoostEnsemble:
    try:
        return BoostEnsemble(
            EnsembleConfig(**doc["config"]),
            tuple(oselm.state_from_dict(w) for w in doc["pool"]),
            np.array(doc["lam_correct"], dtype=float),
            np.array(doc["lam_wrong"], dtype=float),
            np.array(doc["chosen"], dtype=int),
            np.array(doc["alpha"], dtype=float),
            int(doc["n_seen"]),
            doc.get("rng_state"),
        )
    except KeyError as exc:
        raise InputError(f"ensemble document lacks field {exc}") from None


def save_ensemble(ens: BoostEnsemble, path) -> None:
    Path(path).write_text(json.dumps(ensemble_to_dict(ens)))


def load_ensemble(path) -> BoostEnsemble:
    return ensemble_from_dict(json.loads(Path(path).read_text()))
