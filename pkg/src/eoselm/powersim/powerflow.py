"""Newton-Raphson power flow in polar coordinates (flat start)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from eoselm.errors import PowerFlowError
from eoselm.powersim.network import PowerNetwork, build_ybus

PF_TOLERANCE = 1e-8
PF_MAX_ITERS = 30


@dataclass(frozen=True)
class PowerFlowResult:
    V: np.ndarray  # complex bus voltages, p.u.
    S_injection: np.ndarray  # net complex injection per bus, p.u.
    S_gen: np.ndarray  # complex output per generator, p.u.
    iterations: int
    residual: float


def _specified(net: PowerNetwork) -> tuple[np.ndarray, np.ndarray]:
    base = net.base_mva
    P = -np.array([b.pd for b in net.buses]) / base
    Q = -np.array([b.qd for b in net.buses]) / base
    for g in net.generators:
        P[net.bus_index(g.bus)] += g.p_mw / base
    return P, Q


def _mismatch(Y, V, P, Q, pvpq, pq):
    S = V * np.conj(Y @ V)
    return np.concatenate([S.real[pvpq] - P[pvpq], S.imag[pq] - Q[pq]])


def solve_power_flow(net: PowerNetwork, tol: float = PF_TOLERANCE, max_iters: int = PF_MAX_ITERS) -> PowerFlowResult:
    """Solve the pre-fault operating point; generator reactive limits are not enforced."""
    Y = build_ybus(net)
    types = np.array([b.type for b in net.buses])
    vm = np.ones(net.n_bus)
    for k, b in enumerate(net.buses):
        if b.type != "PQ":
            vm[k] = b.vm
    for g in net.generators:
        k = net.bus_index(g.bus)
        if g.vset is not None and types[k] != "PQ":
            vm[k] = g.vset
    va = np.zeros(net.n_bus)
    pv = np.flatnonzero(types == "PV")
    pq = np.flatnonzero(types == "PQ")
    pvpq = np.concatenate([pv, pq])
    P, Q = _specified(net)

    V = vm * np.exp(1j * va)
    F = _mismatch(Y, V, P, Q, pvpq, pq)
    it = 0
    # keep iterating past the tolerance while it still pays off, capped at 3 extra steps
    extra = 0
    while True:
        norm = float(np.max(np.abs(F))) if F.size else 0.0
        if not np.isfinite(norm):
            raise PowerFlowError("power flow diverged (non-finite mismatch)")
        if norm <= tol:
            extra += 1
            if extra > 2 or norm < 1e-13:
                break
        if it >= max_iters:
            raise PowerFlowError(f"power flow did not converge in {max_iters} iterations (mismatch {norm:.3e})")
        Ibus = Y @ V
        diagV = np.diag(V)
        dS_dVa = 1j * diagV @ np.conj(np.diag(Ibus) - Y @ diagV)
        dS_dVm = diagV @ np.conj(Y @ np.diag(V / np.abs(V))) + np.conj(np.diag(Ibus)) @ np.diag(V / np.abs(V))
        J = np.block(
            [
                [dS_dVa.real[np.ix_(pvpq, pvpq)], dS_dVm.real[np.ix_(pvpq, pq)]],
                [dS_dVa.imag[np.ix_(pq, pvpq)], dS_dVm.imag[np.ix_(pq, pq)]],
            ]
        )
        try:
            dx = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            raise PowerFlowError("singular power-flow Jacobian") from None
        va[pvpq] += dx[: len(pvpq)]
        vm[pq] += dx[len(pvpq) :]
        V = vm * np.exp(1j * va)
        F = _mismatch(Y, V, P, Q, pvpq, pq)
        it += 1

    S_inj = V * np.conj(Y @ V)
    S_load = np.array([complex(b.pd, b.qd) for b in net.buses]) / net.base_mva
    S_gen = np.array([S_inj[net.bus_index(g.bus)] + S_load[net.bus_index(g.bus)] for g in net.generators])
    return PowerFlowResult(V, S_inj, S_gen, it, float(np.max(np.abs(F))) if F.size else 0.0)


def power_flow_residual(net: PowerNetwork, result: PowerFlowResult) -> float:
    """Max |mismatch| over the specified quantities, recomputed from scratch."""
    Y = build_ybus(net)
    S = result.V * np.conj(Y @ result.V)
    P, Q = _specified(net)
    types = np.array([b.type for b in net.buses])
    pvpq = types != "slack"
    pq = types == "PQ"
    return float(max(np.max(np.abs(S.real[pvpq] - P[pvpq]), initial=0.0), np.max(np.abs(S.imag[pq] - Q[pq]), initial=0.0)))
