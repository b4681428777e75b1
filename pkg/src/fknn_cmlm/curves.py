"""Functional observations on a shared discrete grid.

Curves of one covariate type are stored row-wise in a 2-D array; the grid
is kept alongside. Everything here is a pure function returning new arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import DataError


def check_grid(points, min_points: int = 3) -> np.ndarray:
    """Return ``points`` as a validated 1-D float grid.

    A grid must have at least ``min_points`` strictly increasing finite
    points. Datasets use the default of three; single-pair distances on
    undifferentiated curves only need two.
    """
    grid = np.asarray(points, dtype=float)
    if grid.ndim != 1:
        raise DataError("grid must be one-dimensional")
    if grid.size < min_points:
        raise DataError(f"grid needs at least {min_points} points, got {grid.size}")
    if not np.all(np.isfinite(grid)):
        raise DataError("grid contains non-finite values")
    if np.any(np.diff(grid) <= 0):
        raise DataError("grid must be strictly increasing")
    return grid


def trapezoid_weights(grid: np.ndarray) -> np.ndarray:
    """Weights ``w`` such that ``w @ f`` is the trapezoid integral of ``f``."""
    grid = np.asarray(grid, dtype=float)
    h = np.diff(grid)
    w = np.zeros_like(grid)
    w[:-1] += h / 2.0
    w[1:] += h / 2.0
    return w


@dataclass(frozen=True)
class CovariateType:
    """``n`` curves observed on one common grid.

    Parameters
    ----------
    name : str
        Label of the covariate type (e.g. ``"ISFET"``).
    grid : array of shape (Q,)
    values : array of shape (n, Q)
    """

    name: str
    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = check_grid(self.grid)
        values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if values.shape[1] != grid.size:
            raise DataError(
                f"covariate {self.name!r}: curves have {values.shape[1]} values "
                f"but the grid has {grid.size} points"
            )
        if not np.all(np.isfinite(values)):
            raise DataError(f"covariate {self.name!r} contains non-finite values")
        grid.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def take(self, idx) -> "CovariateType":
        return CovariateType(self.name, self.grid, self.values[np.asarray(idx)])

    def with_values(self, values) -> "CovariateType":
        return CovariateType(self.name, self.grid, values)


@dataclass(frozen=True)
class Dataset:
    """Aligned curves of ``R`` covariate types plus 1-based class labels.

    ``n_classes`` defaults to the largest label. Labels are validated so that
    every class ``1..G`` occurs at least once, unless ``require_all_classes``
    is False (used for test sets and new observations).
    """

    covariates: tuple
    labels: np.ndarray | None = None
    n_classes: int | None = None
    require_all_classes: bool = field(default=True, compare=False)

    def __post_init__(self):
        covs = tuple(self.covariates)
        if not covs:
            raise DataError("a dataset needs at least one covariate type")
        n = covs[0].n
        for cov in covs:
            if cov.n != n:
                raise DataError(
                    f"covariate {cov.name!r} has {cov.n} curves, expected {n}"
                )
        object.__setattr__(self, "covariates", covs)
        if self.labels is None:
            return
        labels = np.asarray(self.labels)
        if labels.ndim != 1 or labels.size != n:
            raise DataError(f"expected {n} labels, got shape {labels.shape}")
        if not np.issubdtype(labels.dtype, np.integer):
            if not np.all(labels == np.round(labels)):
                raise DataError("labels must be integers")
            labels = labels.astype(int)
        G = self.n_classes if self.n_classes is not None else int(labels.max())
        if labels.min() < 1 or labels.max() > G:
            raise DataError(f"labels must lie in 1..{G}")
        if self.require_all_classes:
            missing = sorted(set(range(1, G + 1)) - set(labels.tolist()))
            if missing:
                raise DataError(f"classes {missing} do not occur in the labels")
        labels = labels.astype(int)
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "n_classes", G)

    @property
    def n(self) -> int:
        return self.covariates[0].n

    @property
    def n_types(self) -> int:
        return len(self.covariates)

    def take(self, idx, require_all_classes: bool = True) -> "Dataset":
        idx = np.asarray(idx)
        labels = None if self.labels is None else self.labels[idx]
        return Dataset(
            tuple(c.take(idx) for c in self.covariates),
            labels,
            self.n_classes,
            require_all_classes=require_all_classes,
        )

    def replace_covariates(self, covariates: Sequence[CovariateType]) -> "Dataset":
        return Dataset(
            tuple(covariates),
            self.labels,
            self.n_classes,
            require_all_classes=self.require_all_classes,
        )


def derive(values, grid, order: int) -> np.ndarray:
    """Finite-difference derivative of order ``order`` along the last axis.

    Each pass uses second-order central differences in the interior and
    second-order one-sided stencils at both ends, so polynomials of degree
    two are differentiated exactly. Non-equidistant grids are supported.

    Parameters
    ----------
    values : array of shape (Q,) or (n, Q)
    grid : array of shape (Q,)
    order : int
        Number of differentiation passes; 0 returns a copy of ``values``.
    """
    grid = check_grid(grid, min_points=2 if order == 0 else 3)
    out = np.array(values, dtype=float, copy=True)
    if order < 0:
        raise ValueError("derivative order must be nonnegative")
    if order > grid.size - 1:
        raise DataError(
            f"derivative order {order} needs more than {grid.size} grid points"
        )
    for _ in range(order):
        out = np.gradient(out, grid, axis=-1, edge_order=2)
    return out


def center(values, grid) -> np.ndarray:
    """Subtract each curve's trapezoid-weighted mean over its grid."""
    values = np.asarray(values, dtype=float)
    w = trapezoid_weights(grid)
    means = (values @ w) / w.sum()
    return values - np.expand_dims(means, -1)


def pooled_sd(values) -> float:
    """Sample standard deviation of all values of all curves together."""
    return float(np.std(np.asarray(values, dtype=float), ddof=1))


def standardize(learn: Dataset, test: Dataset | None = None):
    """Scale every covariate type by the pooled SD of its learning curves.

    The learning-set statistic is applied to both sets so nothing leaks from
    the test data. Returns ``(learn, test, scales)``; ``test`` is None if
    none was passed.
    """
    if learn.n < 1:
        raise DataError("learning set is empty")
    scales = []
    learn_covs, test_covs = [], []
    for j, cov in enumerate(learn.covariates):
        sd = pooled_sd(cov.values) if cov.values.size > 1 else 0.0
        if not sd > 0:
            raise DataError(f"covariate {cov.name!r} is constant on the learning set")
        scales.append(sd)
        learn_covs.append(cov.with_values(cov.values / sd))
        if test is not None:
            tcov = test.covariates[j]
            test_covs.append(tcov.with_values(tcov.values / sd))
    learn_out = learn.replace_covariates(learn_covs)
    test_out = test.replace_covariates(test_covs) if test is not None else None
    return learn_out, test_out, np.array(scales)
