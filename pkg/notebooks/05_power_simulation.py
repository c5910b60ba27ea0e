# %% [markdown]
# # Classical-model transient simulation
#
# Power flow, Kron reduction onto the generator internal nodes, and RK4
# integration of the swing equation through the fault-on and post-fault
# networks. The single-machine case is checked against the equal-area
# critical clearing time.

# %%
import math

import numpy as np

from eoselm.powersim import (
    Contingency,
    load_network,
    prepare,
    simulate,
    simulate_batch,
    smib_network,
    solve_power_flow,
    stability_label,
)

net = load_network("wscc9")
pf = solve_power_flow(net)
print(f"slack output {pf.S_gen[0].real * net.base_mva:.2f} MW, {pf.S_gen[0].imag * net.base_mva:.2f} Mvar")

# %%
for cycles in (6, 15, 20):
    traj = simulate(net, Contingency(6, 0.0, 0.2, 0.2 + cycles / 60), T=3.0)
    print(f"branch 6 fault cleared after {cycles:2d} cycles: max spread "
          f"{math.degrees(traj.max_angle_spread()):7.1f} deg -> label {stability_label(traj):+d}")

# %%
H, xd, X, P = 5.0, 0.3, 0.5, 0.8
smib = smib_network(H, xd, X, P * 100)
cycles = np.arange(1, 25)
labels = [stability_label(t) for t in simulate_batch([prepare(smib, Contingency(1, 0.0, 0.1, 0.1 + c / 60)) for c in cycles])]
print("stable up to", max(c for c, lab in zip(cycles, labels) if lab == 1), "cycles")
