"""
The constrained solver by hand
==============================

The fitting engine is an accelerated proximal gradient method. Under the
nonnegativity constraint each proximal step is a closed-form shrinkage of
the positive part, which this script shows on small inputs before running
the solver on a least-squares problem.
"""

import numpy as np

from fknn_cmlm.optimizer import (
    FistaConfig,
    PenaltySpec,
    fista_solve,
    prox_cats_nonneg,
    prox_lasso_nonneg,
)

# %%
# Lasso shrinkage clips negatives and subtracts the threshold.
print(prox_lasso_nonneg(np.array([0.5, -0.3]), 0.2))  # [0.3, 0]

# %%
# The group version shrinks the positive part towards zero as a whole;
# negative entries stay at exactly zero even when the group survives.
print(prox_cats_nonneg(np.array([3.0, 4.0]), 2.5))   # [1.5, 2.0]
print(prox_cats_nonneg(np.array([3.0, -4.0]), 1.0))  # [2.0, 0.0]

# %%
# Nonnegative lasso regression: the objective never increases because the
# momentum is reset whenever it would.
rng = np.random.default_rng(0)
A = rng.normal(size=(50, 10))
truth = np.r_[2.0, 0.0, 1.0, np.zeros(7)]
b = A @ truth + 0.1 * rng.normal(size=50)


def least_squares(c):
    r = A @ c - b
    return 0.5 * r @ r, A.T @ r


res = fista_solve(least_squares, PenaltySpec("lasso", 1.0), np.zeros(10),
                  FistaConfig(tol=1e-12), keep_trace=True)
print("coefficients", np.round(res.coef, 3))
print(f"{res.iterations} iterations, converged: {res.converged}")
objectives = [row[1] for row in res.trace]
print("monotone:", all(b <= a for a, b in zip(objectives, objectives[1:])))
