"""The 33 system-level stability features and knowledge-base scaling.

Features are read off a simulated trajectory at fixed instants: just before
the fault, the fault instant ``t0`` (fault-on network), the clearing instant
``t_cl`` (post-fault network) and 3, 6 and 9 cycles after clearing. Angles
and speeds are taken relative to the center of inertia (COI), so every
feature is unchanged when all rotor angles shift by a constant.

"System impact" has no published definition; here it is the total
accelerating power ``sum_i (Pm_i - Pe_i)`` at the instant.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from eoselm.errors import ExtractionError, InputError
from eoselm.powersim.dynamics import Trajectory

CYCLE = 1.0 / 60.0
N_FEATURES = 33
FEATURE_NAMES = tuple(f"Tz{i}" for i in range(1, N_FEATURES + 1))
TEST_CLIP = (-0.1, 1.1)


class FeatureSpec(NamedTuple):
    anchor: str
    quantity: str


# quantities evaluated at one anchor instant
QUANTITIES = {
    "mean_pm": "mean_i Pm_i",
    "max_accel": "max_i (Pm_i - Pe_i) / M_i",
    "angle_at_max_accel": "COI angle of argmax_i (Pm_i - Pe_i) / M_i",
    "mean_accel_power": "mean_i (Pm_i - Pe_i)",
    "impact": "sum_i (Pm_i - Pe_i)",
    "angle_of_extreme": "COI angle of argmax_i |COI angle_i|",
    "ke_of_max_angle": "KE of argmax_i COI angle_i",
    "angle_of_max_ke": "COI angle of argmax_i KE_i",
    "max_ke": "max_i KE_i, KE_i = 0.5 M_i (COI speed_i)^2",
    "mean_ke": "mean_i KE_i",
    "spread": "max_{i,j} |delta_i - delta_j|",
    "speed_of_extreme": "COI speed of argmax_i |COI angle_i|",
}

FEATURE_TABLE: tuple[FeatureSpec, ...] = (
    FeatureSpec("t_pre", "mean_pm"),
    FeatureSpec("t0", "max_accel"),
    FeatureSpec("t0", "angle_at_max_accel"),
    FeatureSpec("t0", "mean_accel_power"),
    # t_cl
    FeatureSpec("t_cl", "impact"),
    FeatureSpec("t_cl", "angle_of_extreme"),
    FeatureSpec("t_cl", "ke_of_max_angle"),
    FeatureSpec("t_cl", "angle_of_max_ke"),
    FeatureSpec("t_cl", "max_ke"),
    FeatureSpec("t_cl", "mean_ke"),
    FeatureSpec("t_cl", "spread"),
    FeatureSpec("t_cl", "speed_of_extreme"),
    # t_cl + 3 cycles
    FeatureSpec("t_cl+3c", "impact"),
    FeatureSpec("t_cl+3c", "max_ke"),
    FeatureSpec("t_cl+3c", "mean_ke"),
    FeatureSpec("t_cl+3c", "angle_of_extreme"),
    FeatureSpec("t_cl+3c", "spread"),
    FeatureSpec("t_cl+3c", "ke_of_max_angle"),
    FeatureSpec("t_cl+3c", "speed_of_extreme"),
    # t_cl + 6 cycles
    FeatureSpec("t_cl+6c", "impact"),
    FeatureSpec("t_cl+6c", "max_ke"),
    FeatureSpec("t_cl+6c", "mean_ke"),
    FeatureSpec("t_cl+6c", "ke_of_max_angle"),
    FeatureSpec("t_cl+6c", "angle_of_extreme"),
    FeatureSpec("t_cl+6c", "spread"),
    FeatureSpec("t_cl+6c", "speed_of_extreme"),
    # t_cl + 9 cycles
    FeatureSpec("t_cl+9c", "impact"),
    FeatureSpec("t_cl+9c", "ke_of_max_angle"),
    FeatureSpec("t_cl+9c", "max_ke"),
    FeatureSpec("t_cl+9c", "mean_ke"),
    FeatureSpec("t_cl+9c", "angle_of_extreme"),
    FeatureSpec("t_cl+9c", "spread"),
    FeatureSpec("t_cl+9c", "speed_of_extreme"),
)


@dataclass(frozen=True)
class AnchorTimes:
    t_pre: float
    t0: float
    t_cl: float
    t_cl3: float
    t_cl6: float
    t_cl9: float

    @classmethod
    def for_trajectory(cls, traj: Trajectory) -> "AnchorTimes":
        tc = traj.t_clear
        return cls(traj.t_fault - traj.dt, traj.t_fault, tc, tc + 3 * CYCLE, tc + 6 * CYCLE, tc + 9 * CYCLE)

    def as_dict(self) -> dict[str, float]:
        return {
            "t_pre": self.t_pre,
            "t0": self.t0,
            "t_cl": self.t_cl,
            "t_cl+3c": self.t_cl3,
            "t_cl+6c": self.t_cl6,
            "t_cl+9c": self.t_cl9,
        }


def coi_frame(delta, omega, M):
    """``(delta_coi, delta - delta_coi, omega - omega_coi)``; works on (n,) or (nt, n)."""
    delta = np.asarray(delta, dtype=float)
    omega = np.asarray(omega, dtype=float)
    M = np.asarray(M, dtype=float)
    d_coi = (delta @ M) / M.sum()
    w_coi = (omega @ M) / M.sum()
    return d_coi, delta - np.expand_dims(d_coi, -1), omega - np.expand_dims(w_coi, -1)


def kinetic_energy(M, omega_rel) -> np.ndarray:
    return 0.5 * np.asarray(M) * np.asarray(omega_rel) ** 2


def system_impact(traj: Trajectory, t: float) -> float:
    k = traj.index_at(t)
    return float(np.sum(traj.pm - traj.pe[k]))


def _first_argmax(v: np.ndarray) -> int:
    # np.argmax already returns the first (lowest-index) maximum
    return int(np.argmax(v))


def _quantity(q: str, traj: Trajectory, k: int) -> float:
    M, pm = traj.M, traj.pm
    _, d_rel, w_rel = coi_frame(traj.delta[k], traj.omega[k], M)
    accel_p = pm - traj.pe[k]
    if q == "mean_pm":
        return float(np.mean(pm))
    if q == "max_accel":
        return float(np.max(accel_p / M))
    if q == "angle_at_max_accel":
        return float(d_rel[_first_argmax(accel_p / M)])
    if q == "mean_accel_power":
        return float(np.mean(accel_p))
    if q == "impact":
        return float(np.sum(accel_p))
    ke = kinetic_energy(M, w_rel)
    extreme = _first_argmax(np.abs(d_rel))
    if q == "angle_of_extreme":
        return float(d_rel[extreme])
    if q == "speed_of_extreme":
        return float(w_rel[extreme])
    if q == "ke_of_max_angle":
        return float(ke[_first_argmax(d_rel)])
    if q == "angle_of_max_ke":
        return float(d_rel[_first_argmax(ke)])
    if q == "max_ke":
        return float(np.max(ke))
    if q == "mean_ke":
        return float(np.mean(ke))
    if q == "spread":
        d = traj.delta[k]
        return float(np.max(d) - np.min(d))
    raise KeyError(q)


def anchor_indices(traj: Trajectory) -> dict[str, int]:
    out = {}
    for name, t in AnchorTimes.for_trajectory(traj).as_dict().items():
        if t > traj.horizon + 1e-9 or t < -1e-12:
            raise ExtractionError(f"trajectory ends at {traj.horizon:.4f} s, anchor {name} = {t:.4f} s is missing")
        try:
            out[name] = traj.index_at(t)
        except InputError:
            raise ExtractionError(f"anchor {name} = {t:.6f} s does not fall on the step grid") from None
    return out


def extract_features(traj: Trajectory) -> np.ndarray:
    """The 33 features in table order as a float array."""
    idx = anchor_indices(traj)
    x = np.array([_quantity(spec.quantity, traj, idx[spec.anchor]) for spec in FEATURE_TABLE])
    if not np.all(np.isfinite(x)):
        bad = [FEATURE_NAMES[i] for i in np.flatnonzero(~np.isfinite(x))]
        raise ExtractionError(f"non-finite features {bad}")
    return x


def feature_dictionary() -> str:
    """Markdown table mapping each feature to the formula implemented here."""
    lines = [
        "| Feature | Instant | Formula |",
        "|---|---|---|",
    ]
    for name, spec in zip(FEATURE_NAMES, FEATURE_TABLE):
        lines.append(f"| {name} | {spec.anchor} | {QUANTITIES[spec.quantity]} |")
    notes = [
        "",
        "COI angle_i = delta_i - sum(M delta) / sum(M); COI speed likewise.",
        "Pe at t0 is the fault-on value, Pe at t_cl the post-clearing value.",
        "argmax ties resolve to the lowest machine index.",
        "t_pre is one integration step before the fault.",
    ]
    return "\n".join(lines + notes) + "\n"


# -- normalization -------------------------------------------------------------


@dataclass(frozen=True)
class Scaling:
    lo: np.ndarray
    hi: np.ndarray

    @property
    def zero_range(self) -> np.ndarray:
        return self.hi <= self.lo

    def transform(self, X, clip: tuple[float, float] | None = None) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        rng = np.where(self.zero_range, 1.0, self.hi - self.lo)
        Z = np.where(self.zero_range, 0.5, (X - self.lo) / rng)
        return np.clip(Z, *clip) if clip is not None else Z

    def inverse(self, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=float)
        return np.where(self.zero_range, self.lo, self.lo + Z * (self.hi - self.lo))

    def to_dict(self) -> dict:
        return {"lo": self.lo.tolist(), "hi": self.hi.tolist(), "zero_range": self.zero_range.tolist()}

    @classmethod
    def from_dict(cls, doc: dict) -> "Scaling":
        return cls(np.array(doc["lo"], dtype=float), np.array(doc["hi"], dtype=float))


def fit_scaling(X_train) -> Scaling:
    X_train = np.asarray(X_train, dtype=float)
    if X_train.ndim != 2 or X_train.shape[0] == 0:
        raise InputError("need a non-empty 2-D training matrix")
    return Scaling(X_train.min(axis=0), X_train.max(axis=0))


def normalize_kb(kb):
    """Min-max scale a knowledge base on its training rows.

    ``kb`` needs ``X`` (rows x features) and ``split`` (``"train"``/``"test"``
    per row). Returns ``(scaled kb, Scaling)``; test rows are clipped to
    ``[-0.1, 1.1]``.
    """
    split = np.asarray(kb.split)
    train = split == "train"
    if not train.any():
        raise InputError("knowledge base has no training rows")
    scaling = fit_scaling(kb.X[train])
    Z = scaling.transform(kb.X)
    Z[~train] = np.clip(Z[~train], *TEST_CLIP)
    return replace(kb, X=Z), scaling
