"""Classical-model transient simulation on Kron-reduced networks.

Each machine is a constant EMF ``E'`` behind its transient reactance. Loads
become constant admittances at the pre-fault operating point, so the network
seen by the machines collapses to one small matrix per topology phase
(pre-fault, fault-on, post-fault). The swing equations

    M_i dw_i/dt = Pm_i - Pe_i - D_i w_i / w_s,     d delta_i / dt = w_i

are integrated with fixed-step RK4; the step grid always lands on the fault
and clearing instants. Recorded electrical power is right-continuous: at a
switching instant it belongs to the network that is active from then on.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from eoselm.errors import ConfigurationError, InputError, NumericalError
from eoselm.powersim.network import Contingency, PowerNetwork, build_ybus
from eoselm.powersim.powerflow import PowerFlowResult, solve_power_flow

DEFAULT_DT = 1.0 / 1200.0  # 20 steps per 60 Hz cycle
DEFAULT_T = 5.0
UNSTABLE_ANGLE = 2.0 * math.pi


def load_admittances(net: PowerNetwork, V: np.ndarray) -> np.ndarray:
    """Constant-impedance equivalent of every bus load, ``(P - jQ) / |V|^2``."""
    S = np.array([complex(b.pd, b.qd) for b in net.buses]) / net.base_mva
    return np.conj(S) / np.abs(V) ** 2


def reduce_to_internal(Ybus: np.ndarray, gen_bus_idx, xd, y_load=None) -> np.ndarray:
    """Kron-reduce onto generator internal nodes attached through ``j x'd``.

    ``y_load`` is added to the diagonal of ``Ybus`` (padded with zeros when
    ``Ybus`` carries extra temporary buses).
    """
    nb = Ybus.shape[0]
    gen_bus_idx = np.asarray(gen_bus_idx, dtype=int)
    y_int = 1.0 / (1j * np.asarray(xd, dtype=float))
    Yll = np.array(Ybus, dtype=complex)
    if y_load is not None:
        y_load = np.asarray(y_load, dtype=complex)
        Yll[np.arange(len(y_load)), np.arange(len(y_load))] += y_load
    Yll[gen_bus_idx, gen_bus_idx] += y_int
    Ylg = np.zeros((nb, len(gen_bus_idx)), dtype=complex)
    Ylg[gen_bus_idx, np.arange(len(gen_bus_idx))] = -y_int
    try:
        X = np.linalg.solve(Yll, Ylg)
    except np.linalg.LinAlgError:
        raise NumericalError("bus block of the augmented admittance matrix is singular") from None
    return np.diag(y_int) - Ylg.T @ X


def electrical_power(Y_red: np.ndarray, E, delta) -> np.ndarray:
    """``Pe_i = sum_j E_i E_j (G_ij cos d_ij + B_ij sin d_ij)``; leading batch axes allowed."""
    V = np.asarray(E) * np.exp(1j * np.asarray(delta))
    I = (Y_red * V[..., None, :]).sum(axis=-1)
    return (V * np.conj(I)).real


@dataclass(frozen=True)
class ReducedSystem:
    """Everything the integrator needs for one scenario."""

    Y_pre: np.ndarray
    Y_fault: np.ndarray
    Y_post: np.ndarray
    E: np.ndarray
    delta0: np.ndarray
    Pm: np.ndarray
    M: np.ndarray
    D: np.ndarray
    omega_s: float
    contingency: Contingency

    @property
    def n_machines(self) -> int:
        return len(self.E)


def prepare(net: PowerNetwork, contingency: Contingency, pf: PowerFlowResult | None = None) -> ReducedSystem:
    """Power flow, machine initialization and the three reduced matrices."""
    if not net.generators:
        raise InputError("network has no generators")
    pf = pf or solve_power_flow(net)
    gidx = net.gen_indices()
    xd = net.xd_system()
    Vg = pf.V[gidx]
    Ig = np.conj(pf.S_gen / Vg)
    Eprime = Vg + 1j * xd * Ig
    y_load = load_admittances(net, pf.V)
    Ys = {}
    for phase in ("prefault", "faulted", "postfault"):
        Yb = build_ybus(net, contingency, phase) if phase != "prefault" else build_ybus(net)
        try:
            Ys[phase] = reduce_to_internal(Yb, gidx, xd, y_load)
        except NumericalError as exc:
            raise NumericalError(f"{phase} network: {exc}") from None
    omega_s = net.omega_s
    return ReducedSystem(
        Ys["prefault"],
        Ys["faulted"],
        Ys["postfault"],
        np.abs(Eprime),
        np.angle(Eprime),
        pf.S_gen.real.copy(),
        2.0 * net.h_system() / omega_s,
        net.damping_system(),
        omega_s,
        contingency,
    )


@dataclass
class Trajectory:
    t: np.ndarray  # (nt,)
    delta: np.ndarray  # (nt, n) rad
    omega: np.ndarray  # (nt, n) rad/s deviation
    pe: np.ndarray  # (nt, n) p.u.
    pm: np.ndarray  # (n,)
    M: np.ndarray  # (n,)
    t_fault: float
    t_clear: float
    dt: float
    blown_up: bool = False
    meta: dict = field(default_factory=dict)

    def index_at(self, t: float) -> int:
        """Grid index of time ``t``; raises if ``t`` is not a grid point."""
        k = int(np.searchsorted(self.t, t - 1e-9))
        if k >= len(self.t) or abs(self.t[k] - t) > 1e-9:
            raise InputError(f"t = {t:.6f} s is not on the trajectory grid")
        return k

    @property
    def horizon(self) -> float:
        return float(self.t[-1])

    def max_angle_spread(self) -> float:
        d = self.delta
        return float(np.max(d.max(axis=1) - d.min(axis=1)))


def _segments(t_switch: list[float], dt: float):
    out = []
    for a, b in zip(t_switch[:-1], t_switch[1:]):
        n = round((b - a) / dt)
        if n < 1 or abs(n * dt - (b - a)) > 1e-9 * max(1.0, b - a):
            n = max(1, math.ceil((b - a) / dt))
        out.append((a, b, n))
    return out


def time_grid(t_fault: float, t_clear: float, dt: float, T: float):
    """Step grid whose points include ``t_fault`` and ``t_clear`` exactly.

    Returns ``(t, h, phase)``: grid points, step lengths and the topology
    phase (0 pre-fault, 1 fault-on, 2 post-fault) used during each step.
    Each phase interval is split into equal steps no longer than ``dt``.
    """
    if not 0.0 <= t_fault < t_clear < T:
        raise ConfigurationError("need 0 <= t_fault < t_clear < T")
    if t_fault > 0:
        segs = _segments([0.0, t_fault, t_clear, T], dt)
    else:
        segs = [(0.0, 0.0, 0)] + _segments([0.0, t_clear, T], dt)
    ts, hs, phase = [np.array([0.0])], [], []
    for p, (a, b, n) in enumerate(segs):
        if n:
            ts.append(a + (b - a) * np.arange(1, n + 1) / n)
            hs.append(np.full(n, (b - a) / n))
            phase.append(np.full(n, p))
    return np.concatenate(ts), np.concatenate(hs), np.concatenate(phase)


def _grid_index(t: float, dt: float) -> int | None:
    k = round(t / dt)
    return k if abs(k * dt - t) <= 1e-9 else None


def _step_plan(contingencies: list[Contingency], dt: float, T: float):
    """Common grid for a batch plus one phase schedule per scenario."""
    nT = _grid_index(T, dt)
    idx = [(_grid_index(c.t_fault, dt), _grid_index(c.t_clear, dt)) for c in contingencies]
    if nT is not None and all(f is not None and k is not None for f, k in idx):
        for c in contingencies:
            if not c.t_clear < T:
                raise ConfigurationError("need t_clear < T")
        steps = np.arange(nT)
        phase = np.stack([np.where(steps < f, 0, np.where(steps < k, 1, 2)) for f, k in idx])
        return np.arange(nT + 1) * dt, np.full(nT, dt), phase
    c0 = contingencies[0]
    if any((c.t_fault, c.t_clear) != (c0.t_fault, c0.t_clear) for c in contingencies):
        raise ConfigurationError("off-grid switching times must be shared by the whole batch")
    t, h, phase = time_grid(c0.t_fault, c0.t_clear, dt, T)
    return t, h, np.tile(phase, (len(contingencies), 1))


def _deriv(Y, E, Pm, M, D, ws, delta, omega):
    pe = electrical_power(Y, E, delta)
    return omega, (Pm - pe - D * omega / ws) / M, pe


def simulate_batch(
    systems: list[ReducedSystem], dt: float = DEFAULT_DT, T: float = DEFAULT_T
) -> list[Trajectory]:
    """Integrate several scenarios of equal machine count side by side.

    Switching times may differ between scenarios as long as they fall on
    the ``dt`` grid; otherwise they must be shared.
    """
    if not systems:
        return []
    n = systems[0].n_machines
    if any(s.n_machines != n for s in systems):
        raise ConfigurationError("batched scenarios must have the same machine count")
    stack = lambda name: np.stack([getattr(s, name) for s in systems])
    Yall = np.stack([stack("Y_pre"), stack("Y_fault"), stack("Y_post")])
    E, Pm, M, D = stack("E"), stack("Pm"), stack("M"), stack("D")
    ws = systems[0].omega_s
    t, hs, phase = _step_plan([s.contingency for s in systems], dt, T)
    S, nt = len(systems), len(t)
    rows = np.arange(S)
    delta = np.empty((S, nt, n))
    omega = np.empty((S, nt, n))
    pe = np.empty((S, nt, n))
    d = stack("delta0").astype(float)
    w = np.zeros((S, n))
    alive = np.ones(S, dtype=bool)
    delta[:, 0], omega[:, 0] = d, w
    current = None
    for k, h in enumerate(hs):
        if current is None or not np.array_equal(phase[:, k], current):
            current = phase[:, k]
            args = (Yall[current, rows], E, Pm, M, D, ws)
        k1d, k1w, p0 = _deriv(*args, d, w)
        pe[:, k] = p0
        k2d, k2w, _ = _deriv(*args, d + 0.5 * h * k1d, w + 0.5 * h * k1w)
        k3d, k3w, _ = _deriv(*args, d + 0.5 * h * k2d, w + 0.5 * h * k2w)
        k4d, k4w, _ = _deriv(*args, d + h * k3d, w + h * k3w)
        d = d + (h / 6.0) * (k1d + 2 * k2d + 2 * k3d + k4d)
        w = w + (h / 6.0) * (k1w + 2 * k2w + 2 * k3w + k4w)
        alive &= np.isfinite(d).all(axis=1) & np.isfinite(w).all(axis=1)
        delta[:, k + 1], omega[:, k + 1] = d, w
    pe[:, nt - 1] = electrical_power(Yall[2], E, d)
    return [
        Trajectory(
            t.copy(), delta[i], omega[i], pe[i], s.Pm.copy(), s.M.copy(),
            s.contingency.t_fault, s.contingency.t_clear, dt, blown_up=not alive[i],
        )
        for i, s in enumerate(systems)
    ]


def simulate(
    net: PowerNetwork,
    contingency: Contingency,
    dt: float = DEFAULT_DT,
    T: float = DEFAULT_T,
    pf: PowerFlowResult | None = None,
) -> Trajectory:
    if dt <= 0 or dt > 1e-3 + 1e-15:
        raise ConfigurationError("dt must lie in (0, 1 ms]")
    return simulate_batch([prepare(net, contingency, pf)], dt, T)[0]


def label_from_spread(spread_rad: float) -> int:
    """+1 while the largest rotor-angle separation stays under 360 degrees."""
    if not math.isfinite(spread_rad):
        return -1
    return 1 if spread_rad < UNSTABLE_ANGLE else -1


def stability_label(traj: Trajectory) -> int:
    if traj.blown_up or not (np.isfinite(traj.delta).all()):
        return -1
    return label_from_spread(traj.max_angle_spread())


def transient_energy(Y_red: np.ndarray, E, Pm, M, delta, omega) -> np.ndarray:
    """Kinetic plus potential energy of a lossless reduced network.

    ``W = 0.5 sum M w^2 - sum Pm delta - sum_{i<j} E_i E_j B_ij cos(d_i - d_j)``;
    conserved by the undamped swing equations when ``G = 0``.
    """
    delta = np.atleast_2d(delta)
    omega = np.atleast_2d(omega)
    B = Y_red.imag
    EE = np.outer(E, E) * np.triu(B, 1)
    dd = delta[:, :, None] - delta[:, None, :]
    pot = -np.einsum("ij,tij->t", EE, np.cos(dd))
    return 0.5 * (omega**2 @ M) - delta @ Pm + pot


# -- trajectory files ---------------------------------------------------------


def save_trajectory(traj: Trajectory, path) -> None:
    """JSON with one list per array; floats keep full precision."""
    doc = {
        "t": traj.t.tolist(),
        "delta": traj.delta.tolist(),
        "omega": traj.omega.tolist(),
        "pe": traj.pe.tolist(),
        "pm": traj.pm.tolist(),
        "M": traj.M.tolist(),
        "t_fault": traj.t_fault,
        "t_clear": traj.t_clear,
        "dt": traj.dt,
        "blown_up": traj.blown_up,
        "meta": traj.meta,
    }
    Path(path).write_text(json.dumps(doc))


def load_trajectory(path) -> Trajectory:
    doc = json.loads(Path(path).read_text())
    try:
        return Trajectory(
            np.array(doc["t"]),
            np.array(doc["delta"]),
            np.array(doc["omega"]),
            np.array(doc["pe"]),
            np.array(doc["pm"]),
            np.array(doc["M"]),
            float(doc["t_fault"]),
            float(doc["t_clear"]),
            float(doc["dt"]),
            bool(doc.get("blown_up", False)),
            doc.get("meta", {}),
        )
    except KeyError as exc:
        raise InputError(f"trajectory file lacks field {exc}") from None
