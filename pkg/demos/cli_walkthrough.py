"""
Command line walkthrough
========================

The same steps as the library demos, driven through the ``fknn-cmlm``
command on the toy configuration. Outputs go to ``runs/toy``; every file
records the configuration hash and the seed.
"""

import json
from pathlib import Path

from fknn_cmlm.cli import main

root = Path(__file__).resolve().parents[1]
cfg = str(root / "configs" / "toy.yaml")
out = root / "runs" / "toy"
new = root / "data" / "toy" / "new"

# %%
# Enumerate and decode the ensemble, compute and filter the features.
main(["featurize", "--config", cfg])

# %%
# Fit every configured penalty on all curves: fit_<penalty>.json and an
# RFI table per penalty.
main(["fit", "--config", cfg])
report = json.loads((out / "fit_cs_cats.json").read_text())
print("cs_cats keeps tuples", sorted(int(i) for i in report["coefficients"]))

# %%
# Score held-out curves and evaluate them against their labels.
main(["predict", "--config", cfg, "--fit", str(out / "fit_cs_cats.json"),
      "--data", str(new / "bump.csv"), str(new / "step.csv")])
main(["evaluate", "--predictions", str(out / "predictions.csv"),
      "--labels", str(new / "labels.csv"), "--out", str(out)])

# %%
# Repeated splits; the plan is written before any fitting.
main(["replicate", "--config", cfg])
print((out / "summary.csv").read_text())
