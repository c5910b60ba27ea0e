# %% [markdown]
# # Features and the knowledge base
#
# Thirty-three system-level features are read from each trajectory at the
# fault instant, at clearing and 3, 6 and 9 cycles later. A reduced grid
# shows the knowledge-base pipeline; the full desk grid is `eoselm gen-kb`.

# %%
import numpy as np

from eoselm import features
from eoselm.powersim import Contingency, load_network, simulate
from eoselm.powersim.kb import ScenarioGrid, generate_kb

net = load_network("wscc9")
traj = simulate(net, Contingency(6, 0.0, 0.2, 0.2 + 15 / 60), T=1.0)
x = features.extract_features(traj)
for spec, name, value in list(zip(features.FEATURE_TABLE, features.FEATURE_NAMES, x))[:6]:
    print(f"{name:>5} @ {spec.anchor:<8} {value:+.4f}")

# %%
kb = generate_kb(net, ScenarioGrid(load_levels=(0.8, 1.3), n_dispatch=1, n_faults=10), seed=0, T=2.0)
print(len(kb), "rows,", int(np.sum(kb.y == -1)), "unstable")
scaled, scaling = features.normalize_kb(kb)
Xtr, _ = scaled.part("train")
print("training columns in [0, 1]:", bool(Xtr.min() >= 0 and Xtr.max() <= 1))
