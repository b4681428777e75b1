"""
Building the ensemble features
==============================

Every combination of semi-metric, derivative order, neighbourhood size and
covariate type is one ensemble member. For each learning curve a member
reports the class fractions among its k nearest neighbours (the curve
itself left out). Differences to the last class are the model inputs.
"""

from pathlib import Path

import numpy as np

from fknn_cmlm.config import load_config
from fknn_cmlm.curves import standardize
from fknn_cmlm.ensemble import differences, filter_zero_variance, posteriors
from fknn_cmlm.io import load_config_data

root = Path(__file__).resolve().parents[1]
cfg = load_config(root / "configs" / "toy.yaml")
data = load_config_data(cfg)
print(f"{data.n} curves, {data.n_types} covariate types, {data.n_classes} classes")

# %%
# The ensemble grid: ids run over derivative order, then k, then covariate
# type, then semi-metric.
tuples = cfg.tuples({c.name: c.grid for c in data.covariates})
print(len(tuples), "ensemble members; the first five:")
names = [c.name for c in data.covariates]
for tup in tuples[:5]:
    print("  ", tup.to_dict(names))

# %%
# Posterior probabilities w (n, G, p) on the standardised data, then the
# differences v (n, G-1, p).
learn, _, scales = standardize(data)
w = posteriors(tuples, learn)
v = differences(w)
print("scale factors", np.round(scales, 3))
print("w", w.shape, "rows sum to one:", bool(np.allclose(w.sum(axis=1), 1)))
print("first curve, member 1:", w[0, :, 0], "->", v[0, :, 0])

# %%
# Members whose features do not vary over the learning curves carry no
# information and are removed before fitting.
v_kept, kept, removed = filter_zero_variance(v, tuples)
print(f"{len(kept)} kept, removed ids: {removed}")

# %%
# The shipped phoneme configuration enumerates the full 816-member grid
# from the configuration alone.
phoneme = load_config(root / "configs" / "phoneme.yaml")
print("phoneme ensemble:", len(phoneme.tuples({"log_periodogram": np.arange(1.0, 257.0)})))
