# %% [markdown]
# # Online boosting of OS-ELMs
#
# K weak OS-ELMs share every arriving sample; N selectors each track the
# importance-weighted error of every weak model and vote with weight
# `alpha = 0.5 log((1 - e) / e)`.

# %%
import numpy as np

from eoselm import ensemble, oselm

rng = np.random.default_rng(1)
X = rng.uniform(size=(600, 4))
T = np.where(np.sin(6 * X[:, 0]) + X[:, 1] - 0.5 > 0, 1.0, -1.0)
Xtr, Ttr, Xte, Tte = X[:400], T[:400], X[400:], T[400:]

# %%
cfg = ensemble.EnsembleConfig(K=10, L=15, seed=0)
ens = ensemble.fit(cfg, Xtr, Ttr)
print("selector weights", np.round(ens.alpha, 3))
print("chosen weak models", ens.chosen)

# %%
single = [oselm.fit_sequential(w.layer, Xtr, Ttr, cfg.n0) for w in ens.pool]
weak = [np.mean(oselm.predict_labels(s, Xte) == Tte) for s in single]
print(f"weak test accuracy {np.mean(weak):.3f} (best {max(weak):.3f})")
print(f"ensemble test accuracy {np.mean(ensemble.predict_strong_labels(ens, Xte) == Tte):.3f}")
