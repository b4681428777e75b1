"""
Regenerate the toy dataset
==========================

Writes ``data/toy`` (36 learning curves) and ``data/toy/new`` (12 held-out
curves) from the seeded bump generator. The shipped files were produced by
this script, so running it again leaves them unchanged.
"""

from pathlib import Path

from fknn_cmlm.io import write_dataset
from fknn_cmlm.synthetic import make_bumps

root = Path(__file__).resolve().parents[1] / "data" / "toy"

# three classes: an early bump, a central bump and no bump; the second
# covariate type carries a step that only class 3 has
learn = make_bumps((12, 12, 12), n_points=30, noise=0.5, seed=7)
new = make_bumps((4, 4, 4), n_points=30, noise=0.5, seed=8)

for path in write_dataset(root, learn) + write_dataset(root / "new", new):
    print("wrote", path)
