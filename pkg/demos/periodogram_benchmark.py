"""
Log-periodogram benchmark on simulated speech
=============================================

The phoneme benchmark compares the fitted ensemble with a plain 5-nearest-
neighbour vote on repeated learn/test splits. The real recordings are not
distributed with this package (see the README), so this script runs the
same protocol on simulated log-periodograms with the full 816-member
phoneme ensemble. Expect a few minutes of runtime.

With the real file at ``data/phoneme/phoneme.data`` the full protocol is::

    fknn-cmlm replicate --config configs/phoneme.yaml --jobs 4
"""

from pathlib import Path

import numpy as np

from fknn_cmlm.config import load_config
from fknn_cmlm.curves import standardize
from fknn_cmlm.evaluation import score
from fknn_cmlm.pipeline import featurize, knn_vote, split_plan, train
from fknn_cmlm.synthetic import make_periodograms

root = Path(__file__).resolve().parents[1]
data = make_periodograms(100, seed=2017)
cfg = load_config(root / "configs" / "phoneme.yaml")
tuples = cfg.tuples({"log_periodogram": data.covariates[0].grid})
print(f"{data.n} simulated curves, {len(tuples)} ensemble members")

# %%
# Seeded splits with 40 learning and 60 test curves per class. Features
# are computed once per split and shared by both penalties.
results = {"lasso": [], "cs_lasso": [], "5-NN": []}
for split_id, li, ti in split_plan(data.labels, 3, 20170101, per_class=(40, 60)):
    learn, test = data.take(li), data.take(ti, require_all_classes=False)
    features = featurize(standardize(learn)[0], tuples)
    for kind in ("lasso", "cs_lasso"):
        model = train(learn, tuples, kind, features=features)
        probs, labels = model.predict(test)
        results[kind].append(score(test.labels, probs, labels))
        print(f"split {split_id} {kind:>8}: df {model.fit.df:>3}, "
              f"Brier {results[kind][-1].brier:.4f}, MCR {results[kind][-1].mcr:.3f}")
    probs, labels = knn_vote(learn, test, 5)
    results["5-NN"].append(score(test.labels, probs, labels))

# %%
print("\nmean over splits")
for name, reps in results.items():
    print(f"{name:>8}: Brier {np.mean([r.brier for r in reps]):.4f}, "
          f"MCR {np.mean([r.mcr for r in reps]):.3f}")
