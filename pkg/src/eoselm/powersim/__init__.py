"""Classical-model power-system simulator and knowledge-base generator."""

from eoselm.powersim.dynamics import (
    Trajectory,
    electrical_power,
    load_trajectory,
    prepare,
    reduce_to_internal,
    save_trajectory,
    simulate,
    simulate_batch,
    stability_label,
)
from eoselm.powersim.network import Contingency, PowerNetwork, build_ybus, load_network, smib_network
from eoselm.powersim.powerflow import solve_power_flow

__all__ = [
    "Contingency",
    "PowerNetwork",
    "Trajectory",
    "build_ybus",
    "electrical_power",
    "load_network",
    "load_trajectory",
    "prepare",
    "reduce_to_internal",
    "save_trajectory",
    "simulate",
    "simulate_batch",
    "smib_network",
    "solve_power_flow",
    "stability_label",
]
