# %% [markdown]
# # Kernel fuzzy-rough feature selection
#
# A subset is scored by how far each sample sits, under a Gaussian kernel,
# from its nearest sample of the other class, minus a size penalty. On a
# small table the BinJaya answer can be checked against brute force.

# %%
import numpy as np

from eoselm import featsel, jaya

rng = np.random.default_rng(3)
bits = rng.integers(0, 2, size=(60, 3))
y = np.where(bits.sum(1) % 2 == 1, 1, -1)
X = rng.uniform(size=(60, 10))
X[:, :3] = np.clip(0.1 + 0.8 * bits + rng.normal(scale=0.03, size=(60, 3)), 0, 1)
table = featsel.ClassificationTable(X, y)

# %%
for cols in ([0, 1, 2], [0, 1], list(range(3, 10))):
    print(cols, f"g_C = {featsel.kfrs_criterion(table, cols):.3f}")

# %%
oracle = featsel.brute_force_best_subset(table)
found = featsel.select_features(table, jaya.binjaya_config(pop_size=20, max_iters=100, seed=3))
print("brute force", oracle.indices, f"{oracle.fitness.total:.4f}")
print("BinJaya    ", found.indices, f"{found.fitness.total:.4f}")
