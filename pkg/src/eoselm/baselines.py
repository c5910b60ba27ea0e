"""Stochastic-gradient back-propagation baseline (SGBP).

A single hidden layer of sigmoid units with a linear output, trained on the
squared error one sample at a time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from eoselm.errors import ConfigurationError, InputError


@dataclass(frozen=True)
class SgbpConfig:
    hidden: int = 30
    lr: float = 0.05
    epochs: int = 1
    seed: int = 0
    init_scale: float = 0.5  # weights start in U[-init_scale, init_scale]

    def __post_init__(self):
        if self.hidden < 1 or self.epochs < 0 or self.lr < 0 or self.init_scale <= 0:
            raise ConfigurationError(f"invalid SGBP settings {self}")


@dataclass
class SgbpNet:
    W: np.ndarray  # (hidden, d)
    b: np.ndarray  # (hidden,)
    v: np.ndarray  # (hidden,)
    c: float

    def params(self) -> np.ndarray:
        return np.concatenate([self.W.ravel(), self.b, self.v, [self.c]])

    @classmethod
    def from_params(cls, theta: np.ndarray, hidden: int, d: int) -> "SgbpNet":
        k = hidden * d
        return cls(
            theta[:k].reshape(hidden, d).copy(),
            theta[k : k + hidden].copy(),
            theta[k + hidden : k + 2 * hidden].copy(),
            float(theta[-1]),
        )


def init_sgbp(d: int, config: SgbpConfig) -> SgbpNet:
    rng = np.random.default_rng(config.seed)
    s = config.init_scale
    return SgbpNet(
        rng.uniform(-s, s, (config.hidden, d)),
        rng.uniform(-s, s, config.hidden),
        rng.uniform(-s, s, config.hidden),
        0.0,
    )


def forward(net: SgbpNet, X) -> np.ndarray:
    return expit(np.asarray(X, dtype=float) @ net.W.T + net.b) @ net.v + net.c


def loss(net: SgbpNet, X, T) -> float:
    """Mean of ``0.5 (y - t)^2``."""
    r = forward(net, X) - np.asarray(T, dtype=float).reshape(-1)
    return float(0.5 * np.mean(r**2))


def gradients(net: SgbpNet, X, T) -> SgbpNet:
    """Analytic gradient of :func:`loss`, returned in network form."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    T = np.asarray(T, dtype=float).reshape(-1)
    H = expit(X @ net.W.T + net.b)
    r = (H @ net.v + net.c - T) / len(T)
    dH = np.outer(r, net.v) * H * (1.0 - H)
    return SgbpNet(dH.T @ X, dH.sum(axis=0), H.T @ r, float(r.sum()))


def fit_sgbp(config: SgbpConfig, X, T) -> SgbpNet:
    """Per-sample gradient descent, ``epochs`` passes in the given row order."""
    X = np.asarray(X, dtype=float)
    T = np.asarray(T, dtype=float).reshape(-1)
    if X.ndim != 2 or len(X) != len(T):
        raise InputError("X and T disagree")
    net = init_sgbp(X.shape[1], config)
    for _ in range(config.epochs):
        for x, t in zip(X, T):
            g = gradients(net, x[None, :], [t])
            net.W -= config.lr * g.W
            net.b -= config.lr * g.b
            net.v -= config.lr * g.v
            net.c -= config.lr * g.c
    return net


def predict_labels(net: SgbpNet, X) -> np.ndarray:
    return np.where(forward(net, X) >= 0.0, 1, -1)
