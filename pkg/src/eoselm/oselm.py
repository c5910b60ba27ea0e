"""Online sequential extreme learning machine (OS-ELM).

A single-hidden-layer network with random, frozen hidden nodes. Output
weights are fitted by least squares on an initial block and then refined by
recursive least-squares updates, either chunk-by-chunk or one sample at a
time. Batch fitting over all data (:func:`batch_elm`) gives the same weights
and serves as the oracle for the sequential path.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

import numpy as np
from scipy.special import expit

from eoselm.errors import ConfigurationError, InputError, NumericalError, PreconditionError

ACTIVATIONS = ("sigmoid", "rbf", "polynomial")

# cond(H0'H0) above this is treated as singular
_SINGULAR_COND = 1e14


@dataclass(frozen=True)
class HiddenLayer:
    """Random feature map ``x -> [G(a_1, b_1, x), ..., G(a_L, b_L, x)]``.

    ``weights`` has shape ``(L, input_dim)`` and holds the input weight
    vectors (centres for RBF nodes); ``biases`` has shape ``(L,)`` (impact
    widths for RBF nodes). Both arrays are read-only.
    """

    weights: np.ndarray
    biases: np.ndarray
    activation: str = "sigmoid"
    seed: int | None = None

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        b = np.array(self.biases, dtype=float).reshape(-1)
        if w.ndim != 2 or w.shape[0] != b.shape[0]:
            raise ConfigurationError(f"weights {w.shape} and biases {b.shape} disagree")
        if self.activation not in ACTIVATIONS:
            raise ConfigurationError(f"unknown activation {self.activation!r}")
        w.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "biases", b)

    @property
    def input_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def n_hidden(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class OselmState:
    """Output weights ``beta`` (L x m) and the RLS matrix ``P`` (L x L).

    ``k`` counts the sequential chunks absorbed since the initial phase
    (one-by-one updates count as chunks of size one).
    """

    layer: HiddenLayer
    beta: np.ndarray
    P: np.ndarray
    k: int = 0

    @property
    def m(self) -> int:
        return self.beta.shape[1]


def init_hidden(input_dim: int, L: int, activation: str = "sigmoid", seed: int | None = 0) -> HiddenLayer:
    """Draw hidden node parameters: ``a_i ~ U[-1, 1]^d`` and ``b_i ~ U[0, 1]``."""
    if int(L) < 1 or int(input_dim) < 1:
        raise ConfigurationError(f"need L >= 1 and input_dim >= 1, got L={L}, input_dim={input_dim}")
    if activation not in ACTIVATIONS:
        raise ConfigurationError(f"unknown activation {activation!r}; choose from {ACTIVATIONS}")
    rng = np.random.default_rng(seed)
    weights = rng.uniform(-1.0, 1.0, size=(int(L), int(input_dim)))
    biases = rng.uniform(0.0, 1.0, size=int(L))
    return HiddenLayer(weights, biases, activation, seed)


def _as_inputs(layer: HiddenLayer, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2 or X.shape[1] != layer.input_dim:
        raise InputError(f"expected inputs with {layer.input_dim} columns, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InputError("inputs contain non-finite values")
    return X


def _as_targets(T, n: int) -> np.ndarray:
    T = np.asarray(T, dtype=float)
    if T.ndim <= 1:
        T = T.reshape(-1, 1)
    if T.shape[0] != n:
        raise InputError(f"{n} inputs but {T.shape[0]} targets")
    if not np.all(np.isfinite(T)):
        raise InputError("targets contain non-finite values")
    return T


def hidden_output(layer: HiddenLayer, X) -> np.ndarray:
    """Hidden layer output matrix, shape ``(N, L)``."""
    X = _as_inputs(layer, X)
    if layer.activation == "sigmoid":
        return expit(X @ layer.weights.T + layer.biases)
    if layer.activation == "rbf":
        sq = (
            np.sum(X**2, axis=1)[:, None]
            - 2.0 * X @ layer.weights.T
            + np.sum(layer.weights**2, axis=1)[None, :]
        )
        return np.exp(-layer.biases * np.maximum(sq, 0.0))
    return (X @ layer.weights.T + layer.biases) ** 2


def _symmetrize(P: np.ndarray) -> np.ndarray:
    return 0.5 * (P + P.T)


def init_phase(layer: HiddenLayer, X0, T0, ridge_fallback: bool = True) -> OselmState:
    """Initial least-squares fit: ``P0 = (H0'H0)^-1``, ``beta0 = P0 H0' T0``.

    Requires at least ``L`` samples. A singular ``H0'H0`` raises
    :class:`NumericalError` unless ``ridge_fallback`` is set, in which case
    ``1e-8 * trace / L`` is added to the diagonal and a warning is issued.
    """
    X0 = _as_inputs(layer, X0)
    T0 = _as_targets(T0, X0.shape[0])
    L = layer.n_hidden
    if X0.shape[0] < L:
        raise PreconditionError(f"initial block has {X0.shape[0]} samples, need N0 >= L = {L}")
    H0 = hidden_output(layer, X0)
    A = H0.T @ H0
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > _SINGULAR_COND:
        if not ridge_fallback:
            raise NumericalError("H0'H0 is singular; retry with ridge_fallback=True or more samples")
        eps = 1e-8 * np.trace(A) / L
        warnings.warn(f"H0'H0 is singular, adding ridge {eps:.3g}", RuntimeWarning, stacklevel=2)
        A = A + eps * np.eye(L)
    P0 = _symmetrize(np.linalg.inv(A))
    beta0 = np.linalg.solve(A, H0.T @ T0)
    return OselmState(layer, beta0, P0, 0)


def _check_finite(state: OselmState, P: np.ndarray, beta: np.ndarray) -> None:
    if not (np.all(np.isfinite(P)) and np.all(np.isfinite(beta))):
        raise NumericalError(f"non-finite weights while absorbing chunk {state.k + 1}")


def update_chunk(state: OselmState, X, T) -> OselmState:
    """Absorb one chunk of observations; returns a new state."""
    X = _as_inputs(state.layer, X)
    if X.shape[0] == 0:
        raise PreconditionError("empty chunk")
    T = _as_targets(T, X.shape[0])
    H = hidden_output(state.layer, X)
    P = state.P
    HP = H @ P
    S = np.eye(H.shape[0]) + HP @ H.T
    P_new = _symmetrize(P - HP.T @ np.linalg.solve(S, HP))
    beta = state.beta + P_new @ H.T @ (T - H @ state.beta)
    _check_finite(state, P_new, beta)
    return replace(state, beta=beta, P=P_new, k=state.k + 1)


def update_one(state: OselmState, x, t) -> OselmState:
    """Rank-one update for a single observation."""
    x = _as_inputs(state.layer, x)
    if x.shape[0] != 1:
        raise InputError("update_one takes exactly one sample; use update_chunk")
    t = _as_targets(np.atleast_1d(t).reshape(1, -1), 1)
    h = hidden_output(state.layer, x)[0]
    Ph = state.P @ h
    P_new = _symmetrize(state.P - np.outer(Ph, Ph) / (1.0 + h @ Ph))
    beta = np.outer(P_new @ h, t[0] - h @ state.beta) + state.beta
    _check_finite(state, P_new, beta)
    return replace(state, beta=beta, P=P_new, k=state.k + 1)


def sign_label(score) -> np.ndarray:
    """+1 where ``score >= 0``, else -1 (ties go to +1)."""
    return np.where(np.asarray(score) >= 0.0, 1, -1)


def scores(state: OselmState, X) -> np.ndarray:
    """Network outputs ``h(x) beta`` for a batch, shape ``(N, m)``."""
    return hidden_output(state.layer, X) @ state.beta


def predict(state: OselmState, x) -> tuple[np.ndarray, int]:
    """Score vector and +/-1 label for one input (label from the first output)."""
    s = scores(state, np.asarray(x, dtype=float).reshape(1, -1))[0]
    return s, int(sign_label(s[0]))


def predict_labels(state: OselmState, X) -> np.ndarray:
    return sign_label(scores(state, X)[:, 0])


def batch_elm(layer: HiddenLayer, X, T) -> np.ndarray:
    """Minimum-norm least-squares output weights over all data at once.

    Falls back to a small ridge term (with a warning) when ``H`` is rank
    deficient.
    """
    X = _as_inputs(layer, X)
    T = _as_targets(T, X.shape[0])
    L = layer.n_hidden
    if X.shape[0] < L:
        raise PreconditionError(f"{X.shape[0]} samples, need at least L = {L}")
    H = hidden_output(layer, X)
    if np.linalg.matrix_rank(H) < L:
        A = H.T @ H
        eps = 1e-8 * np.trace(A) / L
        warnings.warn(f"H is rank deficient, solving with ridge {eps:.3g}", RuntimeWarning, stacklevel=2)
        return np.linalg.solve(A + eps * np.eye(L), H.T @ T)
    return np.linalg.lstsq(H, T, rcond=None)[0]


def fit_sequential(
    layer: HiddenLayer, X, T, n0: int, mode: str = "one-by-one", chunk_size: int = 1
) -> OselmState:
    """Initial phase on the first ``n0`` rows, then sequential updates over the rest."""
    X = np.asarray(X, dtype=float)
    T = np.asarray(T, dtype=float)
    state = init_phase(layer, X[:n0], T[:n0])
    if mode == "one-by-one":
        for i in range(n0, X.shape[0]):
            state = update_one(state, X[i], T[i])
    elif mode == "chunk":
        for start in range(n0, X.shape[0], chunk_size):
            state = update_chunk(state, X[start : start + chunk_size], T[start : start + chunk_size])
    else:
        raise ConfigurationError(f"unknown mode {mode!r}")
    return state


# -- serialization ---------------------------------------------------------


def state_to_dict(state: OselmState) -> dict[str, Any]:
    layer = state.layer
    return {
        "kind": "oselm",
        "input_dim": layer.input_dim,
        "L": layer.n_hidden,
        "activation": layer.activation,
        "seed": layer.seed,
        "a": layer.weights.tolist(),
        "b": layer.biases.tolist(),
        "beta": state.beta.tolist(),
        "P": state.P.tolist(),
        "k": state.k,
    }


def state_from_dict(doc: dict[str, Any]) -> OselmState:
    try:
        layer = HiddenLayer(np.array(doc["a"]), np.array(doc["b"]), doc["activation"], doc.get("seed"))
        state = OselmState(layer, np.array(doc["beta"], dtype=float), np.array(doc["P"], dtype=float), int(doc["k"]))
    except KeyError as exc:
        raise InputError(f"model document lacks field {exc}") from None
    if layer.input_dim != doc["input_dim"] or layer.n_hidden != doc["L"] or state.beta.shape[0] != doc["L"]:
        raise InputError("model document dimensions are inconsistent")
    return state


def save_state(state: OselmState, path) -> None:
    Path(path).write_text(json.dumps(state_to_dict(state)))


def load_state(path) -> OselmState:
    return state_from_dict(json.loads(Path(path).read_text()))
