"""Functional data classification with k-nearest-neighbour ensembles whose
weights are fitted by a penalised, nonnegativity-constrained multinomial
logit model."""

__version__ = "0.1.0"

from .curves import CovariateType, Dataset, center, derive, standardize
from .ensemble import (
    TupleSpec,
    differences,
    enumerate_tuples,
    filter_zero_variance,
    neighborhood,
    posteriors,
    posteriors_new,
)
from .evaluation import brier, mcr, rfi, score
from .exceptions import ConfigError, DataError, FknnError, NumericError
from .model import (
    FitResult,
    fit,
    fit_path,
    lambda_max,
    log_likelihood,
    predict,
    probabilities,
    select_by_aic,
)
from .optimizer import (
    FistaConfig,
    PenaltySpec,
    fista_solve,
    prox_cats_nonneg,
    prox_lasso_nonneg,
)
from .pipeline import TrainedModel, knn_vote, train
from .semimetrics import SemiMetric, distance, weight_profile

__all__ = [
    "CovariateType",
    "ConfigError",
    "Dataset",
    "DataError",
    "FistaConfig",
    "FitResult",
    "FknnError",
    "NumericError",
    "PenaltySpec",
    "SemiMetric",
    "TrainedModel",
    "TupleSpec",
    "brier",
    "center",
    "derive",
    "differences",
    "distance",
    "enumerate_tuples",
    "filter_zero_variance",
    "fista_solve",
    "fit",
    "fit_path",
    "knn_vote",
    "lambda_max",
    "log_likelihood",
    "mcr",
    "neighborhood",
    "posteriors",
    "posteriors_new",
    "predict",
    "probabilities",
    "prox_cats_nonneg",
    "prox_lasso_nonneg",
    "rfi",
    "score",
    "select_by_aic",
    "standardize",
    "train",
    "weight_profile",
]
