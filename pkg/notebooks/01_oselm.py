# %% [markdown]
# # Online sequential ELM
#
# A random sigmoid hidden layer, an initial least-squares fit on the first
# `n0` rows, then recursive updates one sample (or one chunk) at a time.
# The sequential solution equals the batch one up to round-off.

# %%
import numpy as np

from eoselm import oselm

rng = np.random.default_rng(0)
X = rng.normal(size=(500, 10))
T = np.where(X[:, 0] + 0.5 * X[:, 1] + 0.3 * rng.normal(size=500) >= 0, 1.0, -1.0)
layer = oselm.init_hidden(10, 20, "sigmoid", seed=0)

# %%
batch = oselm.batch_elm(layer, X, T)
one = oselm.fit_sequential(layer, X, T, n0=70, mode="one-by-one")
chunk = oselm.fit_sequential(layer, X, T, n0=70, mode="chunk", chunk_size=25)
for name, state in [("one-by-one", one), ("chunks of 25", chunk)]:
    err = np.linalg.norm(state.beta - batch) / np.linalg.norm(batch)
    print(f"{name:>12}: relative distance to batch solution {err:.1e}")

# %%
print("training accuracy", np.mean(oselm.predict_labels(one, X) == T))
score, label = oselm.predict(one, X[0])
print("first sample score", score, "label", label)
