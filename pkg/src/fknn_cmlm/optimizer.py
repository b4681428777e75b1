"""Accelerated proximal gradient (FISTA) under nonnegativity constraints.

Minimises ``f(c) + lam * J(c)`` over ``c >= 0`` where ``f`` is smooth and
``J`` is one of

* ``"lasso"``: ``sum |c_l|`` on a global coefficient vector of shape (p,),
* ``"cs_lasso"``: ``sum |c_gl|`` on class-specific coefficients (G-1, p),
* ``"cs_cats"``: ``sqrt(G-1) * sum_l ||c_{.l}||_2`` on (G-1, p), grouping the
  class-specific coefficients of each feature.

With the constraint, the proximal operators reduce to their unconstrained
versions applied to the positive part of the input.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .exceptions import NumericError

PENALTIES = ("lasso", "cs_lasso", "cs_cats")


@dataclass(frozen=True)
class PenaltySpec:
    kind: str
    lam: float

    def __post_init__(self):
        if self.kind not in PENALTIES:
            raise ValueError(f"unknown penalty {self.kind!r}; choose from {PENALTIES}")
        if not self.lam >= 0:
            raise ValueError("lambda must be nonnegative")

    @property
    def class_specific(self) -> bool:
        return self.kind != "lasso"


@dataclass(frozen=True)
class FistaConfig:
    """Solver settings.

    ``tol`` bounds the relative change of the penalised objective between
    accepted iterates; ``step`` is the initial step size and ``backtrack``
    the factor it is multiplied by when the sufficient-decrease test fails.
    """

    max_iters: int = 5000
    tol: float = 1e-8
    step: float = 1.0
    backtrack: float = 0.5

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not self.step > 0:
            raise ValueError("step must be positive")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack must lie in (0, 1)")


@dataclass
class FistaResult:
    coef: np.ndarray
    objective: float
    iterations: int
    converged: bool
    step: float
    trace: list = field(default_factory=list)


def prox_lasso_nonneg(u, threshold: float) -> np.ndarray:
    """``argmin_{c >= 0} 0.5 ||c - u||^2 + threshold * sum |c|``, entrywise."""
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    return np.maximum(np.maximum(u, 0.0) - threshold, 0.0)


def prox_cats_nonneg(u, threshold: float) -> np.ndarray:
    """``argmin_{c >= 0} 0.5 ||c - u||^2 + threshold * ||c||_2``.

    ``threshold`` is the effective one, i.e. ``lam * sqrt(G - 1)`` already
    multiplied in. Works on a single group (1-D ``u``) or column-wise on a
    (G-1, p) matrix whose columns are the groups. Entries clipped to zero
    stay zero even if the group survives.
    """
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    plus = np.maximum(np.asarray(u, dtype=float), 0.0)
    norm = np.linalg.norm(plus, axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        factor = np.where(norm > threshold, 1.0 - threshold / norm, 0.0)
    return factor * plus


def penalty_value(c: np.ndarray, kind: str) -> float:
    """``J(c)`` for a feasible ``c``."""
    if kind == "cs_cats":
        return float(np.sqrt(c.shape[0]) * np.linalg.norm(c, axis=0).sum())
    return float(np.abs(c).sum())


def prox(u: np.ndarray, threshold: float, kind: str) -> np.ndarray:
    """Constrained proximal map of ``threshold * J``."""
    if kind == "cs_cats":
        return prox_cats_nonneg(u, threshold * np.sqrt(u.shape[0]))
    return prox_lasso_nonneg(u, threshold)


def _check_layout(c: np.ndarray, kind: str) -> None:
    if kind == "lasso" and c.ndim != 1:
        raise ValueError("the global lasso needs a coefficient vector")
    if kind != "lasso" and c.ndim != 2:
        raise ValueError(f"{kind} needs class-specific coefficients of shape (G-1, p)")


def fista_solve(
    smooth: Callable[[np.ndarray], tuple[float, np.ndarray]],
    penalty: PenaltySpec,
    x0: np.ndarray,
    config: FistaConfig = FistaConfig(),
    keep_trace: bool = False,
    value: Callable[[np.ndarray], float] | None = None,
) -> FistaResult:
    """Minimise ``smooth(c) + lam * J(c)`` subject to ``c >= 0``.

    Parameters
    ----------
    smooth : callable
        Returns ``(value, gradient)`` of the smooth part at ``c``.
    penalty : PenaltySpec
    x0 : ndarray
        Starting point (warm start); its shape fixes the layout. Negative
        entries are clipped.
    config : FistaConfig
    keep_trace : bool
        Record ``(iteration, objective, step)`` for every accepted iterate.
    value : callable, optional
        Cheaper value-only version of ``smooth``, used in the line search.

    Notes
    -----
    Step sizes are found by backtracking on the usual quadratic upper bound.
    Momentum is reset whenever a step would increase the penalised
    objective, which keeps the objective sequence non-increasing.
    """
    kind, lam = penalty.kind, penalty.lam
    x = np.maximum(np.asarray(x0, dtype=float), 0.0)
    _check_layout(x, kind)

    def evaluate(c, it):
        val, grad = smooth(c)
        if not np.isfinite(val) or not np.all(np.isfinite(grad)):
            raise NumericError(f"non-finite objective or gradient at iteration {it}",
                               iteration=it, lam=lam)
        return float(val), grad

    def evaluate_value(c, it):
        if value is None:
            return evaluate(c, it)[0]
        val = value(c)
        if not np.isfinite(val):
            raise NumericError(f"non-finite objective at iteration {it}",
                               iteration=it, lam=lam)
        return float(val)

    fx, _ = evaluate(x, 0)
    Fx = fx + lam * penalty_value(x, kind)
    y, t = x.copy(), 1.0
    step = config.step
    trace = [(0, Fx, step)] if keep_trace else []
    restarted = True  # y == x
    converged = False
    it = 0
    for it in range(1, config.max_iters + 1):
        fy, gy = evaluate(y, it)
        while True:
            z = prox(y - step * gy, step * lam, kind)
            fz = evaluate_value(z, it)
            diff = z - y
            bound = fy + np.vdot(gy, diff) + np.vdot(diff, diff) / (2 * step)
            if fz <= bound + 1e-12 * max(1.0, abs(fy)):
                break
            step *= config.backtrack
            if step < 1e-300:
                raise NumericError(f"step size underflow at iteration {it}",
                                   iteration=it, lam=lam)
        Fz = fz + lam * penalty_value(z, kind)
        if Fz > Fx:
            if restarted:
                # a plain proximal step from x cannot increase F except by
                # rounding; nothing left to gain
                converged = True
                break
            y, t, restarted = x.copy(), 1.0, True
            continue
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = z + ((t - 1.0) / t_next) * (z - x)
        change = abs(Fx - Fz) / max(1.0, abs(Fx))
        x, Fx, t, restarted = z, Fz, t_next, False
        if keep_trace:
            trace.append((it, Fx, step))
        if change < config.tol:
            converged = True
            break
    return FistaResult(x, Fx, it, converged, step, trace)


def write_trace(path, trace) -> None:
    """Dump a solver trace as CSV (iteration, objective, step)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "objective", "step"])
        for row in trace:
            writer.writerow([row[0], repr(float(row[1])), repr(float(row[2]))])
