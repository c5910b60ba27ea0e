"""Batch knowledge-base generation: load levels x dispatch draws x faults."""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from eoselm import features
from eoselm.errors import ConfigurationError, EoselmError, InputError
from eoselm.powersim.dynamics import DEFAULT_DT, DEFAULT_T, ReducedSystem, prepare, simulate_batch, stability_label
from eoselm.powersim.network import Contingency, PowerNetwork, scale_loads, with_dispatch
from eoselm.powersim.powerflow import solve_power_flow

log = logging.getLogger(__name__)

FAULT_LOCATIONS = (0.0, 0.25, 0.5, 0.75)
KB_FLOAT = "%.9g"


@dataclass(frozen=True)
class ScenarioGrid:
    load_levels: tuple[float, ...] = tuple(np.round(np.linspace(0.8, 1.3, 5), 6))
    n_dispatch: int = 3
    n_faults: int = 20
    t_fault: float = 0.2
    clear_cycles: float = 15.0
    dispatch_spread: float = 0.2  # non-slack outputs drawn from level * base * U[1 - s, 1 + s]
    train_fraction: float = 2.0 / 3.0

    def __post_init__(self):
        if not self.load_levels or min(self.load_levels) <= 0:
            raise ConfigurationError("load levels must be positive")
        if self.n_dispatch < 1 or self.n_faults < 1:
            raise ConfigurationError("need at least one dispatch draw and one fault")
        if self.clear_cycles <= 0 or not 0 <= self.dispatch_spread < 1:
            raise ConfigurationError("bad clearing time or dispatch spread")
        if not 0 < self.train_fraction < 1:
            raise ConfigurationError("train_fraction must lie in (0, 1)")

    @property
    def t_clear(self) -> float:
        return self.t_fault + self.clear_cycles / 60.0

    @property
    def size(self) -> int:
        return len(self.load_levels) * self.n_dispatch * self.n_faults


@dataclass
class KnowledgeBase:
    scenario_id: np.ndarray
    load_level: np.ndarray
    fault_id: np.ndarray
    X: np.ndarray
    y: np.ndarray
    split: np.ndarray
    feature_names: tuple[str, ...] = features.FEATURE_NAMES
    rejected: list[tuple[int, str]] = field(default_factory=list)

    def __post_init__(self):
        if self.X.ndim != 2 or self.X.shape[0] != len(self.y):
            raise InputError("X rows and labels disagree")
        if not set(np.unique(self.y).tolist()) <= {1, -1}:
            raise InputError("labels must be +1 or -1")

    def __len__(self) -> int:
        return len(self.y)

    def part(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        m = self.split == name
        return self.X[m], self.y[m].astype(float)

    def minority_fraction(self) -> float:
        return float(min(np.mean(self.y == 1), np.mean(self.y == -1))) if len(self.y) else 0.0


def fault_list(net: PowerNetwork, n_faults: int) -> list[tuple[int, float]]:
    """``n_faults`` (branch id, location) pairs spread evenly over all line faults."""
    cands = [(br.id, a) for br in net.branches if not br.is_transformer for a in FAULT_LOCATIONS]
    if not cands:
        raise ConfigurationError("network has no lines to fault")
    if n_faults >= len(cands):
        return cands
    pick = np.unique(np.round(np.linspace(0, len(cands) - 1, n_faults)).astype(int))
    return [cands[i] for i in pick]


def draw_dispatch(net: PowerNetwork, level: float, spread: float, rng: np.random.Generator) -> np.ndarray:
    """Scheduled MW per generator; the slack unit picks up the balance in the power flow."""
    factors = rng.uniform(1.0 - spread, 1.0 + spread, size=len(net.generators))
    slack = {b.id for b in net.buses if b.type == "slack"}
    return np.array(
        [g.p_mw if g.bus in slack else g.p_mw * level * f for g, f in zip(net.generators, factors)]
    )


def _run_chunk(systems: list[ReducedSystem], dt: float, T: float):
    rows = []
    for traj in simulate_batch(systems, dt, T):
        try:
            rows.append((features.extract_features(traj), stability_label(traj), None))
        except EoselmError as exc:
            rows.append((None, None, str(exc)))
    return rows


def generate_kb(
    net: PowerNetwork,
    grid: ScenarioGrid = ScenarioGrid(),
    seed: int = 0,
    dt: float = DEFAULT_DT,
    T: float = DEFAULT_T,
    batch_size: int = 64,
    workers: int = 1,
) -> KnowledgeBase:
    """Simulate every scenario of ``grid``, extract features and label.

    Scenarios are integrated in fixed chunks of ``batch_size`` regardless of
    ``workers``, so serial and parallel runs give identical bytes.
    """
    faults = fault_list(net, grid.n_faults)
    scenarios = []  # (scenario_id, level, fault_id, system or None, reason)
    sid = 0
    for li, level in enumerate(grid.load_levels):
        for di in range(grid.n_dispatch):
            rng = np.random.default_rng(np.random.SeedSequence([seed, li, di]))
            case = with_dispatch(scale_loads(net, level), draw_dispatch(net, level, grid.dispatch_spread, rng))
            try:
                pf = solve_power_flow(case)
                reason = None
            except EoselmError as exc:
                pf, reason = None, f"power flow: {exc}"
            for fi, (br, loc) in enumerate(faults):
                system = None
                if pf is not None:
                    try:
                        system = prepare(case, Contingency(br, loc, grid.t_fault, grid.t_clear), pf)
                    except EoselmError as exc:
                        reason = f"network reduction: {exc}"
                scenarios.append((sid, level, fi, system, reason if system is None else None))
                sid += 1

    ready = [s for s in scenarios if s[3] is not None]
    chunks = [ready[i : i + batch_size] for i in range(0, len(ready), batch_size)]
    args = [[s[3] for s in ch] for ch in chunks]
    if workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_run_chunk, args, [dt] * len(args), [T] * len(args)))
    else:
        results = [_run_chunk(a, dt, T) for a in args]

    outcome = {}
    for ch, res in zip(chunks, results):
        for s, r in zip(ch, res):
            outcome[s[0]] = r
    rows, rejected = [], []
    for s_id, level, fi, system, reason in scenarios:
        x, label, err = outcome.get(s_id, (None, None, reason))
        if x is None:
            rejected.append((s_id, err))
            log.warning("scenario %d rejected: %s", s_id, err)
            continue
        rows.append((s_id, level, fi, x, label))

    if not rows:
        return KnowledgeBase(np.zeros(0, int), np.zeros(0), np.zeros(0, int), np.zeros((0, features.N_FEATURES)),
                             np.zeros(0, int), np.zeros(0, dtype="<U5"), rejected=rejected)
    order = np.random.default_rng(seed).permutation(len(rows))
    rows = [rows[i] for i in order]
    n_train = int(round(grid.train_fraction * len(rows)))
    split = np.array(["train"] * n_train + ["test"] * (len(rows) - n_train))
    return KnowledgeBase(
        np.array([r[0] for r in rows]),
        np.array([r[1] for r in rows], dtype=float),
        np.array([r[2] for r in rows]),
        np.vstack([r[3] for r in rows]),
        np.array([r[4] for r in rows], dtype=int),
        split,
        rejected=rejected,
    )


# -- CSV ---------------------------------------------------------------------


def kb_header(names=features.FEATURE_NAMES) -> list[str]:
    return ["scenario_id", "load_level", "fault_id", *names, "label", "split"]


def write_kb(kb: KnowledgeBase, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(kb_header(kb.feature_names))
        for i in range(len(kb)):
            w.writerow(
                [int(kb.scenario_id[i]), KB_FLOAT % kb.load_level[i], int(kb.fault_id[i])]
                + [KB_FLOAT % v for v in kb.X[i]]
                + [int(kb.y[i]), kb.split[i]]
            )


def read_kb(path) -> KnowledgeBase:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty knowledge-base file") from None
        if header[:3] != ["scenario_id", "load_level", "fault_id"] or header[-2:] != ["label", "split"]:
            raise InputError(f"{path}: unexpected header")
        names = tuple(header[3:-2])
        rows = list(reader)
    for k, r in enumerate(rows):
        if len(r) != len(header):
            raise InputError(f"{path}: row {k + 2} has {len(r)} fields, expected {len(header)}")
    if not rows:
        return KnowledgeBase(np.zeros(0, int), np.zeros(0), np.zeros(0, int), np.zeros((0, len(names))),
                             np.zeros(0, int), np.zeros(0, dtype="<U5"), names)
    try:
        return KnowledgeBase(
            np.array([int(r[0]) for r in rows]),
            np.array([float(r[1]) for r in rows]),
            np.array([int(r[2]) for r in rows]),
            np.array([[float(v) for v in r[3:-2]] for r in rows]),
            np.array([int(r[-2]) for r in rows]),
            np.array([r[-1] for r in rows]),
            names,
        )
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None


def write_rejections(kb: KnowledgeBase, path) -> None:
    Path(path).write_text("".join(f"{sid}\t{reason}\n" for sid, reason in kb.rejected))
