"""End-to-end training and prediction: standardise, featurise, filter, fit.

:func:`train` runs the whole procedure on a learning set and returns a
:class:`TrainedModel` that can score new curves.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import ensemble as ens
from .curves import Dataset, standardize
from .exceptions import DataError
from .model import (
    FitResult,
    fit,
    fit_path,
    lambda_grid,
    lambda_max,
    mean_aic_select,
    predict_labels,
    probabilities,
    select_by_aic,
)
from .optimizer import FistaConfig, PenaltySpec
from .semimetrics import SemiMetric

logger = logging.getLogger(__name__)


@dataclass
class TrainedModel:
    """A fitted ensemble model and everything needed to score new curves."""

    learn: Dataset  # standardised learning data
    scales: np.ndarray
    tuples: list  # filtered ensemble
    fit: FitResult
    path: list = field(default_factory=list)
    removed_ids: list = field(default_factory=list)

    def rescale(self, new: Dataset) -> Dataset:
        return new.replace_covariates(
            [c.with_values(c.values / s) for c, s in zip(new.covariates, self.scales)]
        )

    def predict_proba(self, new: Dataset, jobs: int = 1) -> np.ndarray:
        members = ens.select(self.tuples, self.fit.tuple_ids)
        w = ens.posteriors_new(members, self.learn, self.rescale(new), jobs)
        return probabilities(ens.differences(w), self.fit.coef)

    def predict(self, new: Dataset, jobs: int = 1):
        probs = self.predict_proba(new, jobs)
        return probs, predict_labels(probs)


def featurize(learn: Dataset, tuples, jobs: int = 1, cache_dir=None, fmt: str = "npz"):
    """LOO difference features of ``learn`` after zero-variance filtering.

    Returns ``(v, kept_tuples, removed_ids)``.
    """
    w = ens.cached_posteriors(tuples, learn, cache_dir, jobs, fmt)
    return ens.filter_zero_variance(ens.differences(w), tuples)


def train(
    learn: Dataset,
    tuples,
    kind: str = "lasso",
    lambdas=None,
    lambda_size: int = 50,
    lambda_ratio: float = 1e-3,
    solver: FistaConfig = FistaConfig(),
    do_standardize: bool = True,
    aic_folds: int = 1,
    seed: int = 0,
    jobs: int = 1,
    cache_dir=None,
    features=None,
) -> TrainedModel:
    """Fit the constrained multinomial logit ensemble on ``learn``.

    ``lambdas`` overrides the default grid (``lambda_size`` log-spaced values
    from the largest useful ``lam`` down to ``lambda_ratio`` times it). With
    ``aic_folds > 1`` the AIC is averaged over that many subsets before the
    final fit on all learning data. ``features`` may pass precomputed
    ``(v, kept_tuples, removed_ids)`` (computed on the standardised data).
    """
    if do_standardize:
        learn, _, scales = standardize(learn)
    else:
        scales = np.ones(learn.n_types)
    if features is None:
        features = featurize(learn, tuples, jobs, cache_dir)
    v, kept, removed = features
    labels = learn.labels
    ids = [t.id for t in kept]
    if lambdas is None:
        grid = lambda_grid(lambda_max(v, labels, kind), lambda_size, lambda_ratio)
    else:
        grid = np.asarray(lambdas, dtype=float)
    if aic_folds > 1:
        lam = mean_aic_select(v, labels, kind, grid, aic_folds, seed, solver)
        path = fit_path(v, labels, kind, grid[grid >= lam], solver, ids, removed)
        best = path[-1]
    else:
        path = fit_path(v, labels, kind, grid, solver, ids, removed)
        best = select_by_aic(path)
    logger.info("%s: lambda=%g df=%d aic=%.4g", kind, best.lam, best.df, best.aic)
    return TrainedModel(learn, scales, kept, best, path, removed)


def refit(model: TrainedModel, lam: float, solver: FistaConfig = FistaConfig(),
          features=None) -> FitResult:
    """Fit the same ensemble at a fixed ``lam`` (no AIC search)."""
    v, kept, removed = features or featurize(model.learn, model.tuples)
    return fit(v, model.learn.labels, PenaltySpec(model.fit.kind, lam), solver,
               tuple_ids=[t.id for t in kept], removed_tuple_ids=removed)


def knn_vote(learn: Dataset, new: Dataset, k: int = 5, covariate: int = 0,
             do_standardize: bool = True):
    """Plain Euclidean k-NN majority vote on one covariate type.

    Returns ``(probs, labels)`` where ``probs`` are the neighbour class
    fractions; vote ties go to the smaller class index.
    """
    if do_standardize:
        learn, new, _ = standardize(learn, new)
    tup = ens.TupleSpec(SemiMetric.make("eucl"), 0, k, covariate, 1)
    w = ens.posteriors_new([tup], learn, new)[:, :, 0]
    return w, predict_labels(w)


def split_plan(labels, n_splits: int, seed: int, per_class=None, sizes=None):
    """Seeded learn/test splits.

    Either ``per_class = (n_learn, n_test)`` draws that many curves per
    class, or ``sizes = (n_learn, n_test)`` draws from all curves.
    Returns a list of ``(split_id, learn_idx, test_idx)`` with sorted index
    arrays.
    """
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    plan = []
    for split in range(1, n_splits + 1):
        if per_class is not None:
            n_learn, n_test = per_class
            learn_idx, test_idx = [], []
            for g in np.unique(labels):
                members = np.flatnonzero(labels == g)
                if members.size < n_learn + n_test:
                    raise DataError(
                        f"class {g} has {members.size} curves, need {n_learn + n_test}"
                    )
                perm = rng.permutation(members)
                learn_idx.append(perm[:n_learn])
                test_idx.append(perm[n_learn:n_learn + n_test])
            learn_idx = np.concatenate(learn_idx)
            test_idx = np.concatenate(test_idx)
        elif sizes is not None:
            n_learn, n_test = sizes
            if labels.size < n_learn + n_test:
                raise DataError(f"{labels.size} curves cannot fill {n_learn} + {n_test}")
            perm = rng.permutation(labels.size)
            learn_idx, test_idx = perm[:n_learn], perm[n_learn:n_learn + n_test]
        else:
            raise ValueError("give either per_class or sizes")
        plan.append((split, np.sort(learn_idx), np.sort(test_idx)))
    return plan
