# %% [markdown]
# # Jaya and binary Jaya
#
# Jaya moves every candidate towards the current best and away from the
# current worst, keeping a move only when it improves. BinJaya searches the
# four coefficients of an angle-modulation generating function whose sign
# pattern is the bitstring.

# %%
import numpy as np

from eoselm import jaya

res = jaya.jaya_run(jaya.JayaConfig(pop_size=20, dims=10, lower=-5, upper=5, max_iters=250, seed=42),
                    lambda x: float(x @ x))
print(f"sphere: best f {res.best.f:.2e} after {res.iterations} iterations")
print("history non-increasing:", all(b <= a for a, b in zip(res.history, res.history[1:])))

# %%
target = np.array([1, 1, 1, 0, 0, 0, 0, 0, 0, 0], dtype=bool)
res = jaya.binjaya_run(jaya.binjaya_config(pop_size=20, max_iters=60, seed=0),
                       lambda bits: float(np.sum(bits != target)), n_bits=10)
print("bits", res.bits.astype(int), "mismatches", res.f)
print("generating-function coefficients", np.round(res.params, 3))
