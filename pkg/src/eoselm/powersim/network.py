"""Network data types, JSON I/O and bus-admittance assembly.

All impedances are per unit on the system base. Generator inertia and
transient reactance are stored on the machine base and converted on access.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from eoselm.errors import ConfigurationError, InputError, TopologyError

BUS_TYPES = ("slack", "PV", "PQ")
FAULT_ADMITTANCE = 1e6  # bolted three-phase fault, p.u.
INFINITE_BUS_H = 1e6
INFINITE_BUS_XD = 1e-6


@dataclass(frozen=True)
class Bus:
    id: int
    type: str
    pd: float = 0.0  # MW
    qd: float = 0.0  # MVAr
    gs: float = 0.0  # MW at 1 p.u. voltage
    bs: float = 0.0  # MVAr at 1 p.u. voltage
    vm: float = 1.0  # setpoint for slack/PV, initial guess otherwise


@dataclass(frozen=True)
class Branch:
    id: int
    from_bus: int
    to_bus: int
    r: float
    x: float
    b_half: float = 0.0
    tap: float = 1.0  # off-nominal ratio on the from side
    kind: str = ""  # "line" or "transformer"; inferred from the tap when empty

    def __post_init__(self):
        if not self.kind:
            object.__setattr__(self, "kind", "transformer" if self.tap != 1.0 else "line")
        if self.kind not in ("line", "transformer"):
            raise InputError(f"branch {self.id}: unknown kind {self.kind!r}")

    @property
    def is_transformer(self) -> bool:
        return self.kind == "transformer"

    @property
    def series_admittance(self) -> complex:
        return 1.0 / complex(self.r, self.x)


@dataclass(frozen=True)
class Generator:
    bus: int
    h: float  # inertia constant, s, machine base
    xd_prime: float  # p.u., machine base
    d: float = 0.0  # damping, p.u. power per p.u. speed
    mva: float = 100.0
    p_mw: float = 0.0  # scheduled output (ignored for the slack unit)
    vset: float | None = None

    def __post_init__(self):
        if self.h <= 0 or self.xd_prime <= 0 or self.mva <= 0:
            raise InputError(f"generator at bus {self.bus}: H, x'd and rating must be positive")


@dataclass(frozen=True)
class PowerNetwork:
    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]
    generators: tuple[Generator, ...] = ()
    base_mva: float = 100.0
    f_hz: float = 60.0
    name: str = ""
    _index: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        ids = [b.id for b in self.buses]
        if len(set(ids)) != len(ids):
            raise InputError("bus ids must be unique")
        if len({br.id for br in self.branches}) != len(self.branches):
            raise InputError("branch ids must be unique")
        index = {bid: k for k, bid in enumerate(ids)}
        for b in self.buses:
            if b.type not in BUS_TYPES:
                raise InputError(f"bus {b.id}: unknown type {b.type!r}")
        if sum(b.type == "slack" for b in self.buses) != 1:
            raise InputError("exactly one slack bus required")
        for br in self.branches:
            if br.from_bus not in index or br.to_bus not in index:
                raise InputError(f"branch {br.id} references an unknown bus")
            if br.x <= 0 or br.tap <= 0:
                raise InputError(f"branch {br.id}: reactance and tap must be positive")
        for g in self.generators:
            if g.bus not in index:
                raise InputError(f"generator references unknown bus {g.bus}")
        if len({g.bus for g in self.generators}) != len(self.generators):
            raise InputError("at most one generator per bus")
        object.__setattr__(self, "_index", index)

    @property
    def n_bus(self) -> int:
        return len(self.buses)

    def bus_index(self, bus_id: int) -> int:
        return self._index[bus_id]

    def branch(self, branch_id: int) -> Branch:
        for br in self.branches:
            if br.id == branch_id:
                return br
        raise ConfigurationError(f"no branch with id {branch_id}")

    def gen_indices(self) -> np.ndarray:
        return np.array([self._index[g.bus] for g in self.generators], dtype=int)

    def h_system(self) -> np.ndarray:
        return np.array([g.h * g.mva / self.base_mva for g in self.generators])

    def xd_system(self) -> np.ndarray:
        return np.array([g.xd_prime * self.base_mva / g.mva for g in self.generators])

    def damping_system(self) -> np.ndarray:
        return np.array([g.d * g.mva / self.base_mva for g in self.generators])

    @property
    def omega_s(self) -> float:
        return 2.0 * np.pi * self.f_hz


@dataclass(frozen=True)
class Contingency:
    """Three-phase fault on a branch, ``location`` measured from its from-bus."""

    branch_id: int
    location: float = 0.0
    t_fault: float = 0.2
    t_clear: float = 0.3
    trip_branch: bool = False  # post-fault topology keeps the branch by default

    def __post_init__(self):
        if not 0.0 <= self.location <= 1.0:
            raise ConfigurationError("fault location must lie in [0, 1]")
        if not self.t_clear > self.t_fault >= 0.0:
            raise ConfigurationError("need t_clear > t_fault >= 0")


# -- I/O --------------------------------------------------------------------


def network_from_dict(doc: dict) -> PowerNetwork:
    try:
        buses = tuple(Bus(**b) for b in doc["buses"])
        branches = tuple(
            Branch(
                b["id"], b["from"], b["to"], b["r"], b["x"], b.get("b_half", 0.0), b.get("tap", 1.0) or 1.0, b.get("kind", "")
            )
            for b in doc["branches"]
        )
        gens = tuple(Generator(**g) for g in doc.get("generators", []))
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed network document: {exc}") from None
    return PowerNetwork(buses, branches, gens, float(doc.get("base_mva", 100.0)), float(doc.get("f_hz", 60.0)), doc.get("name", ""))


def network_to_dict(net: PowerNetwork) -> dict:
    return {
        "name": net.name,
        "base_mva": net.base_mva,
        "f_hz": net.f_hz,
        "buses": [vars(b) for b in net.buses],
        "branches": [
            {
                "id": b.id, "from": b.from_bus, "to": b.to_bus, "r": b.r, "x": b.x,
                "b_half": b.b_half, "tap": b.tap, "kind": b.kind,
            }
            for b in net.branches
        ],
        "generators": [vars(g) for g in net.generators],
    }


def load_network(source) -> PowerNetwork:
    """Load a network from a JSON path, or a bundled system by name (``wscc9``, ``ieee39``)."""
    if isinstance(source, str) and not source.endswith(".json") and "/" not in source:
        text = resources.files("eoselm.powersim").joinpath("data", f"{source}.json").read_text()
    else:
        text = Path(source).read_text()
    return network_from_dict(json.loads(text))


def save_network(net: PowerNetwork, path) -> None:
    Path(path).write_text(json.dumps(network_to_dict(net), indent=2) + "\n")


# -- Y-bus -------------------------------------------------------------------


def check_connected(n_bus: int, edges) -> None:
    edges = list(edges)
    if n_bus == 0:
        raise TopologyError("network has no buses")
    rows = [a for a, _ in edges]
    cols = [b for _, b in edges]
    graph = coo_matrix((np.ones(len(edges)), (rows, cols)), shape=(n_bus, n_bus))
    n_comp, _ = connected_components(graph, directed=False)
    if n_comp != 1:
        raise TopologyError(f"network splits into {n_comp} islands")


def _stamp(Y: np.ndarray, i: int, j: int, y: complex, b_half: float, tap: float) -> None:
    ysh = 1j * b_half
    Y[i, i] += (y + ysh) / tap**2
    Y[j, j] += y + ysh
    Y[i, j] -= y / tap
    Y[j, i] -= y / tap


def build_ybus(net: PowerNetwork, contingency: Contingency | None = None, phase: str = "prefault") -> np.ndarray:
    """Dense bus admittance matrix for ``prefault``, ``faulted`` or ``postfault``.

    A mid-branch fault adds one temporary bus (last row/column) that splits
    the faulted branch in proportion to ``location``.
    """
    if phase not in ("prefault", "faulted", "postfault"):
        raise ConfigurationError(f"unknown phase {phase!r}")
    if phase != "prefault" and contingency is None:
        raise ConfigurationError(f"phase {phase!r} needs a contingency")
    faulted = net.branch(contingency.branch_id) if phase != "prefault" else None
    mid = faulted is not None and phase == "faulted" and 0.0 < contingency.location < 1.0
    if mid and faulted.is_transformer:
        raise ConfigurationError(f"branch {faulted.id} is a transformer; only end faults are supported")
    n = net.n_bus + (1 if mid else 0)
    Y = np.zeros((n, n), dtype=complex)
    edges = []
    for br in net.branches:
        i, j = net.bus_index(br.from_bus), net.bus_index(br.to_bus)
        if faulted is not None and br.id == faulted.id:
            if phase == "postfault" and contingency.trip_branch:
                continue
            if mid:
                a = contingency.location
                k = n - 1
                _stamp(Y, i, k, 1.0 / (a * complex(br.r, br.x)), a * br.b_half, 1.0)
                _stamp(Y, k, j, 1.0 / ((1 - a) * complex(br.r, br.x)), (1 - a) * br.b_half, 1.0)
                edges += [(i, k), (k, j)]
                continue
        _stamp(Y, i, j, br.series_admittance, br.b_half, br.tap)
        edges.append((i, j))
    check_connected(n, edges)
    for k, b in enumerate(net.buses):
        Y[k, k] += complex(b.gs, b.bs) / net.base_mva
    if phase == "faulted":
        if mid:
            where = n - 1
        else:
            end = faulted.from_bus if contingency.location == 0.0 else faulted.to_bus
            where = net.bus_index(end)
        Y[where, where] += FAULT_ADMITTANCE
    return Y


def scale_loads(net: PowerNetwork, level: float) -> PowerNetwork:
    """Copy of ``net`` with every bus load multiplied by ``level``."""
    buses = tuple(replace(b, pd=b.pd * level, qd=b.qd * level) for b in net.buses)
    return replace(net, buses=buses)


def with_dispatch(net: PowerNetwork, p_mw) -> PowerNetwork:
    """Copy of ``net`` with new scheduled generator outputs (MW, per generator)."""
    gens = tuple(replace(g, p_mw=float(p)) for g, p in zip(net.generators, p_mw))
    return replace(net, generators=gens)


def smib_network(
    h: float = 5.0,
    xd_prime: float = 0.3,
    x_line: float = 0.5,
    p_mw: float = 80.0,
    vt: float = 1.0,
    r_line: float = 0.0,
    base_mva: float = 100.0,
    f_hz: float = 60.0,
) -> PowerNetwork:
    """Single machine on bus 1 feeding an infinite bus (bus 2) over one line.

    The infinite bus is a slack machine with huge inertia and negligible
    reactance, so the reduced network keeps the classical two-machine form.
    """
    buses = (Bus(1, "PV", vm=vt), Bus(2, "slack", vm=1.0))
    branches = (Branch(1, 1, 2, r_line, x_line, 0.0, 1.0, "line"),)
    gens = (
        Generator(1, h, xd_prime, 0.0, base_mva, p_mw, vt),
        Generator(2, INFINITE_BUS_H, INFINITE_BUS_XD, 0.0, base_mva, 0.0, 1.0),
    )
    return PowerNetwork(buses, branches, gens, base_mva, f_hz, "smib")
