"""Prediction scores and relative feature importance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DataError


def coded_response(labels, n_classes: int) -> np.ndarray:
    """One-hot matrix ``z`` with ``z[i, g-1] = 1`` iff ``labels[i] == g``."""
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 1 or labels.max() > n_classes):
        raise DataError(f"labels must lie in 1..{n_classes}")
    z = np.zeros((labels.size, n_classes))
    z[np.arange(labels.size), labels - 1] = 1.0
    return z


def brier(z, probs) -> float:
    """Brier score averaged over observations and classes.

    ``Q = 1/(n G) * sum_i sum_g (z_ig - pi_ig)^2``
    """
    z = np.asarray(z, dtype=float)
    probs = np.asarray(probs, dtype=float)
    if z.shape != probs.shape or z.ndim != 2:
        raise DataError(f"shape mismatch: coded response {z.shape}, probabilities {probs.shape}")
    if z.shape[0] == 0:
        raise DataError("no observations")
    return float(np.mean((z - probs) ** 2))


def mcr(labels, predicted) -> float:
    """Misclassification (error) rate."""
    labels = np.asarray(labels)
    predicted = np.asarray(predicted)
    if labels.shape != predicted.shape:
        raise DataError("label vectors differ in length")
    if labels.size == 0:
        raise DataError("no observations")
    return float(np.mean(labels != predicted))


def rfi(coef) -> np.ndarray:
    """Relative feature importance in percent, one value per feature.

    Class-specific coefficients ``(G-1, p)`` are summed over classes first.
    """
    coef = np.asarray(coef, dtype=float)
    per_feature = coef if coef.ndim == 1 else coef.sum(axis=0)
    total = per_feature.sum()
    if not total > 0:
        raise DataError("relative feature importance is undefined for all-zero coefficients")
    return 100.0 * per_feature / total


@dataclass(frozen=True)
class ScoreReport:
    brier: float
    mcr: float
    n_test: int


def score(labels, probs, predicted=None) -> ScoreReport:
    """Brier score and MCR of predicted probabilities against true labels."""
    probs = np.asarray(probs, dtype=float)
    if predicted is None:
        predicted = np.argmax(probs, axis=1) + 1
    z = coded_response(labels, probs.shape[1])
    return ScoreReport(brier(z, probs), mcr(labels, predicted), int(np.size(labels)))


def five_number_summary(values) -> dict:
    """Boxplot data: min, lower quartile, median, upper quartile, max, mean."""
    values = np.asarray(values, dtype=float)
    q = np.quantile(values, [0.0, 0.25, 0.5, 0.75, 1.0])
    return {
        "min": float(q[0]),
        "q1": float(q[1]),
        "median": float(q[2]),
        "q3": float(q[3]),
        "max": float(q[4]),
        "mean": float(values.mean()),
    }
