"""Constrained multinomial logit model on ensemble difference features.

For observation ``i`` and class ``g < G`` the linear predictor is
``eta_ig = v_ig . c`` (global weights) or ``eta_ig = v_ig . c_g``
(class-specific weights); the reference class ``G`` has ``eta = 0``. All
weights are constrained to be nonnegative and the model has no intercept,
so zero weights give the uniform distribution.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import NumericError
from .optimizer import FistaConfig, PenaltySpec, fista_solve

logger = logging.getLogger(__name__)


class _Design:
    """Difference features laid out for fast products in both layouts."""

    def __init__(self, v):
        v = np.asarray(v, dtype=float)
        if v.ndim == 2:
            v = v[None]
        self.shape = v.shape
        n, Gm1, p = v.shape
        self.flat = np.ascontiguousarray(v).reshape(n * Gm1, p)
        self.by_class = np.ascontiguousarray(v.transpose(1, 0, 2))
        # feature-major copies: rows of active features are contiguous, so
        # sparse coefficients only touch the memory they need
        self.flat_t = np.ascontiguousarray(self.flat.T)
        self.by_class_t = np.ascontiguousarray(self.by_class.transpose(0, 2, 1))

    def eta(self, coef: np.ndarray) -> np.ndarray:
        n, Gm1, p = self.shape
        if coef.ndim == 1:
            active = np.flatnonzero(coef)
            if active.size > p // 2:
                return (self.flat @ coef).reshape(n, Gm1)
            return (coef[active] @ self.flat_t[active]).reshape(n, Gm1)
        out = np.empty((n, Gm1))
        for g in range(Gm1):
            active = np.flatnonzero(coef[g])
            if active.size > p // 2:
                out[:, g] = self.by_class[g] @ coef[g]
            else:
                out[:, g] = coef[g, active] @ self.by_class_t[g, active]
        return out

    def grad(self, resid: np.ndarray, global_coef: bool) -> np.ndarray:
        if global_coef:
            return resid.reshape(-1) @ self.flat
        return np.stack([resid[:, g] @ self.by_class[g] for g in range(self.shape[1])])


def _log_softmax_ref(eta: np.ndarray) -> np.ndarray:
    """Log probabilities from ``(n, G-1)`` predictors; reference class has 0."""
    m = np.maximum(eta.max(axis=1, keepdims=True), 0.0)
    log_norm = m + np.log(np.exp(-m) + np.exp(eta - m).sum(axis=1, keepdims=True))
    return np.concatenate([eta, np.zeros((eta.shape[0], 1))], axis=1) - log_norm


def log_probabilities(v, coef) -> np.ndarray:
    """Log class probabilities, shape ``(n, G)``."""
    design = v if isinstance(v, _Design) else _Design(v)
    return _log_softmax_ref(design.eta(np.asarray(coef, dtype=float)))


def probabilities(v, coef) -> np.ndarray:
    """Class probabilities ``(n, G)``; a single ``(G-1, p)`` row gives ``(1, G)``."""
    return np.exp(log_probabilities(v, coef))


def log_likelihood(v, labels, coef) -> float:
    """``sum_i log pi_{i, y_i}`` with 1-based labels."""
    logp = log_probabilities(v, coef)
    labels = np.asarray(labels)
    return float(logp[np.arange(labels.size), labels - 1].sum())


def _coded(labels, G: int) -> np.ndarray:
    z = np.zeros((labels.size, G))
    z[np.arange(labels.size), np.asarray(labels) - 1] = 1.0
    return z


def loglik_gradient(v, labels, coef) -> np.ndarray:
    """Gradient of :func:`log_likelihood` with respect to ``coef``."""
    design = _Design(v)
    resid = (_coded(np.asarray(labels), design.shape[1] + 1) - probabilities(design, coef))
    return design.grad(resid[:, :-1], np.ndim(coef) == 1)


def negative_loglik(v, labels):
    """Smooth-loss oracle for the solver.

    Returns ``(oracle, value)`` where ``oracle(c)`` gives
    ``(-log L(c), -grad log L(c))`` and ``value(c)`` only the first part.
    """
    design = _Design(v)
    labels = np.asarray(labels)
    z = _coded(labels, design.shape[1] + 1)
    rows = np.arange(labels.size)

    def value(coef):
        return -float(log_probabilities(design, coef)[rows, labels - 1].sum())

    def oracle(coef):
        logp = log_probabilities(design, coef)
        resid = (z - np.exp(logp))[:, :-1]
        return -float(logp[rows, labels - 1].sum()), -design.grad(resid, coef.ndim == 1)

    return oracle, value


def zero_coef(v, kind: str) -> np.ndarray:
    _, Gm1, p = np.shape(v)
    return np.zeros(p) if kind == "lasso" else np.zeros((Gm1, p))


def lambda_max(v, labels, kind: str) -> float:
    """Smallest ``lam`` for which ``c = 0`` is optimal.

    From the optimality conditions at zero under ``c >= 0``: every entry of
    the log-likelihood gradient must not exceed ``lam`` (lasso kinds), or the
    norm of each feature's positive gradient part must not exceed
    ``lam * sqrt(G-1)`` (CATS).
    """
    grad = loglik_gradient(v, labels, zero_coef(v, kind))
    plus = np.maximum(grad, 0.0)
    if kind == "cs_cats":
        return float(np.linalg.norm(plus, axis=0).max() / np.sqrt(plus.shape[0]))
    return float(plus.max())


def lambda_grid(lmax: float, size: int = 50, ratio: float = 1e-3) -> np.ndarray:
    """``size`` log-spaced values from ``lmax`` down to ``ratio * lmax``."""
    if not lmax > 0:
        lmax = 1.0
    if size == 1:
        return np.array([lmax])
    return np.geomspace(lmax, ratio * lmax, size)


@dataclass
class FitResult:
    """One penalised fit.

    ``probabilities`` are the fitted probabilities on the learning data;
    ``tuple_ids`` name the columns of ``coef``.
    """

    coef: np.ndarray
    lam: float
    kind: str
    loglik: float
    df: int
    aic: float
    probabilities: np.ndarray
    tuple_ids: list = field(default_factory=list)
    removed_tuple_ids: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = True
    step: float = 1.0

    @property
    def n_classes(self) -> int:
        return self.probabilities.shape[1]

    def nonzero_ids(self) -> list:
        mask = self.coef > 0 if self.coef.ndim == 1 else (self.coef > 0).any(axis=0)
        return [i for i, m in zip(self.tuple_ids, mask) if m]

    def to_dict(self) -> dict:
        coef = self.coef
        if coef.ndim == 1:
            coefs = {str(i): float(c) for i, c in zip(self.tuple_ids, coef) if c > 0}
        else:
            coefs = {
                str(i): [float(x) for x in coef[:, j]]
                for j, i in enumerate(self.tuple_ids)
                if (coef[:, j] > 0).any()
            }
        return {
            "penalty": self.kind,
            "lambda": float(self.lam),
            "loglik": float(self.loglik),
            "df": int(self.df),
            "aic": float(self.aic),
            "n_classes": int(self.n_classes),
            "tuple_ids": [int(i) for i in self.tuple_ids],
            "coefficients": coefs,
            "removed_tuple_ids": [int(i) for i in self.removed_tuple_ids],
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
        }

    @classmethod
    def coef_from_dict(cls, report: dict) -> np.ndarray:
        ids = report["tuple_ids"]
        pos = {i: j for j, i in enumerate(ids)}
        if report["penalty"] == "lasso":
            coef = np.zeros(len(ids))
            for key, value in report["coefficients"].items():
                coef[pos[int(key)]] = value
        else:
            coef = np.zeros((report["n_classes"] - 1, len(ids)))
            for key, value in report["coefficients"].items():
                coef[:, pos[int(key)]] = value
        return coef


def _result(v, labels, coef, lam, kind, tuple_ids, removed, solver=None) -> FitResult:
    coef = np.where(coef > 0, coef, 0.0)
    ll = log_likelihood(v, labels, coef)
    df = int(np.count_nonzero(coef > 0))
    return FitResult(
        coef=coef,
        lam=float(lam),
        kind=kind,
        loglik=ll,
        df=df,
        aic=-2.0 * ll + 2.0 * df,
        probabilities=probabilities(v, coef),
        tuple_ids=list(tuple_ids) if tuple_ids is not None else list(range(1, coef.shape[-1] + 1)),
        removed_tuple_ids=list(removed or []),
        iterations=solver.iterations if solver else 0,
        converged=solver.converged if solver else True,
        step=solver.step if solver else 1.0,
    )


def fit(v, labels, penalty: PenaltySpec, config: FistaConfig = FistaConfig(),
        warm_start=None, tuple_ids=None, removed_tuple_ids=None) -> FitResult:
    """Penalised maximum likelihood for one ``lam``."""
    v = np.asarray(v, dtype=float)
    labels = np.asarray(labels)
    x0 = zero_coef(v, penalty.kind) if warm_start is None else warm_start
    try:
        oracle, value = negative_loglik(v, labels)
        res = fista_solve(oracle, penalty, x0, config, value=value)
    except NumericError as err:
        raise NumericError(f"{err} (lambda = {penalty.lam:g})",
                           iteration=err.iteration, lam=penalty.lam) from err
    if not res.converged:
        logger.warning("solver hit max_iters=%d at lambda=%g", config.max_iters, penalty.lam)
    return _result(v, labels, res.coef, penalty.lam, penalty.kind, tuple_ids,
                   removed_tuple_ids, res)


def fit_path(v, labels, kind: str, grid=None, config: FistaConfig = FistaConfig(),
             tuple_ids=None, removed_tuple_ids=None) -> list[FitResult]:
    """Fits along a decreasing ``lam`` grid, each warm-started from the last.

    Without ``grid`` the default is 50 log-spaced values from
    :func:`lambda_max` down to ``1e-3`` times that.
    """
    if grid is None:
        grid = lambda_grid(lambda_max(v, labels, kind))
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("lambda grid is empty")
    if grid.size > 1 and np.any(np.diff(grid) >= 0):
        raise ValueError("lambda grid must be strictly decreasing")
    if np.any(grid < 0):
        raise ValueError("lambda values must be nonnegative")
    path = []
    warm = None
    for lam in grid:
        res = fit(v, labels, PenaltySpec(kind, float(lam)), config, warm,
                  tuple_ids, removed_tuple_ids)
        if path and res.df < path[-1].df:
            logger.info("df dropped from %d to %d at lambda=%g", path[-1].df, res.df, lam)
        path.append(res)
        warm = res.coef
        config = replace(config, step=res.step)
    return path


def select_by_aic(path: list[FitResult]) -> FitResult:
    """Fit with minimal AIC; ties go to the larger ``lam``."""
    if not path:
        raise ValueError("empty path")
    return min(path, key=lambda r: (r.aic, -r.lam))


def predict_labels(probs) -> np.ndarray:
    """1-based argmax labels; ties go to the smaller class index."""
    return np.argmax(np.asarray(probs), axis=1) + 1


def mean_aic_select(v, labels, kind: str, grid, folds: int, seed: int = 0,
                    config: FistaConfig = FistaConfig()) -> float:
    """``lam`` from ``grid`` minimising the AIC averaged over ``folds`` subsets.

    Each fold refits the path on the learning rows outside that fold; the
    returned value is then meant for a final fit on all rows.
    """
    v = np.asarray(v, dtype=float)
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    fold_of = rng.permutation(np.arange(labels.size) % folds)
    aics = np.zeros(len(grid))
    for f in range(folds):
        rows = fold_of != f
        path = fit_path(v[rows], labels[rows], kind, grid, config)
        aics += np.array([r.aic for r in path])
    aics /= folds
    best = min(range(len(grid)), key=lambda j: (aics[j], -grid[j]))
    return float(grid[best])


def predict(result: FitResult, tuples, learn, new, jobs: int = 1):
    """Class probabilities and labels for new observations.

    ``tuples`` must contain the (filtered) ensemble used for ``result``;
    only the ids in ``result.tuple_ids`` are featurised.
    """
    from .ensemble import differences, posteriors_new, select

    members = select(tuples, result.tuple_ids)
    if [t.id for t in members] != list(result.tuple_ids):
        raise ValueError("ensemble does not contain all fitted tuples")
    w = posteriors_new(members, learn, new, jobs)
    probs = probabilities(differences(w), result.coef)
    return probs, predict_labels(probs)
