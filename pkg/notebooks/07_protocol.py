# %% [markdown]
# # The experimental protocol through the CLI
#
# Knowledge base, model selection, repeated trials, feature selection,
# streaming prediction and the benchmark table, written to one directory.
# Trials are cut to 5 here; the defaults run 50.

# %%
import csv
import json
import tempfile
from pathlib import Path

from eoselm.cli import main

out = Path(tempfile.mkdtemp())
common = ["--out-dir", str(out), "--trials", "5"]
for step in (["gen-kb"], ["model-select"], ["train-eval", "--L", "selected"], ["predict"]):
    assert main(step + common) == 0

# %%
with open(out / "aggregates.csv") as fh:
    for row in csv.DictReader(fh):
        print(f"{row['method']:>7}: test {float(row['test_mean']):.4f} +/- {float(row['test_sd']):.4f}")
print(json.loads((out / "predict-summary.json").read_text()))
