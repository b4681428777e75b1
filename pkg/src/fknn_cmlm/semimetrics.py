"""Parameterised semi-metrics between curves.

Nine families are available, each extracting a particular curve feature:

=============  ============================================================
``eucl``       L2 distance over the whole domain
``scan``       L2 distance of Gaussian-weighted profiles centred at ``tau``
``short_eucl`` L2 distance restricted to ``interval``
``mean``       difference of the integrals over the domain
``rel_areas``  difference of ``|int_D1 x / int_D2 x|``
``jump``       difference of the jump heights ``x(t_b) - x(t_o)``
``max``        difference of maxima
``min``        difference of minima
``points``     mean absolute difference at impact points
=============  ============================================================

All integrals use the trapezoid rule on the observation grid. Requested time
points are snapped to the nearest grid point (ties go to the earlier one).

Every family can be written as a feature map followed by a plain distance
(weighted Euclidean, scaled city-block or absolute difference). ``embed``
exposes that map so whole distance matrices are computed with
:func:`scipy.spatial.distance.cdist`; ``distance`` evaluates the defining
formula for one pair directly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.spatial.distance import cdist

from .curves import center, check_grid, derive, trapezoid_weights
from .exceptions import ConfigError, DataError

KINDS = (
    "eucl",
    "scan",
    "short_eucl",
    "mean",
    "rel_areas",
    "jump",
    "max",
    "min",
    "points",
)

_REQUIRED = {
    "eucl": (),
    "scan": ("tau", "sigma"),
    "short_eucl": ("interval",),
    "mean": (),
    "rel_areas": ("num_interval", "den_interval"),
    "jump": ("points",),
    "max": (),
    "min": (),
    "points": ("points",),
}
_OPTIONAL = {"scan": ("scale",)}

# Relative tolerance when checking that points lie inside the grid span.
_SPAN_TOL = 1e-9


def _freeze(value):
    if isinstance(value, (list, tuple, np.ndarray)):
        return tuple(float(v) for v in value)
    return float(value)


@dataclass(frozen=True)
class SemiMetric:
    """One semi-metric family together with its parameters.

    Parameters are stored as sorted ``(name, value)`` pairs so instances are
    hashable and compare by value. Use :meth:`make` to build one.
    """

    kind: str
    params: tuple = ()
    centered: bool = False

    @classmethod
    def make(cls, kind: str, centered: bool = False, **params) -> "SemiMetric":
        if kind not in KINDS:
            raise ConfigError(f"unknown semi-metric kind {kind!r}")
        allowed = set(_REQUIRED[kind]) | set(_OPTIONAL.get(kind, ()))
        missing = set(_REQUIRED[kind]) - set(params)
        if missing:
            raise ConfigError(f"{kind}: missing parameters {sorted(missing)}")
        extra = set(params) - allowed
        if extra:
            raise ConfigError(f"{kind}: unexpected parameters {sorted(extra)}")
        frozen = {k: _freeze(v) for k, v in params.items()}
        if kind == "scan":
            frozen.setdefault("scale", 300.0)
            if frozen["sigma"] <= 0 or frozen["scale"] <= 0:
                raise ConfigError("scan: sigma and scale must be positive")
        for key in ("interval", "num_interval", "den_interval"):
            if key in frozen:
                iv = frozen[key]
                if len(iv) != 2 or not iv[0] < iv[1]:
                    raise ConfigError(f"{kind}: {key} must be an increasing pair")
        if kind == "jump" and len(frozen["points"]) != 2:
            raise ConfigError("jump: points must be a pair (t_b, t_o)")
        if kind == "points" and len(frozen["points"]) < 1:
            raise ConfigError("points: at least one impact point is required")
        return cls(kind, tuple(sorted(frozen.items())), bool(centered))

    def __getitem__(self, key: str) -> Any:
        return dict(self.params)[key]

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind}
        for key, value in self.params:
            out[key] = list(value) if isinstance(value, tuple) else value
        if self.centered:
            out["centered"] = True
        return out

    @classmethod
    def from_dict(cls, entry: dict) -> "SemiMetric":
        entry = dict(entry)
        kind = entry.pop("kind")
        centered = entry.pop("centered", False)
        return cls.make(kind, centered=centered, **entry)

    def label(self) -> str:
        parts = [f"{k}={v}" for k, v in self.params]
        name = self.kind + ("[centered]" if self.centered else "")
        return name + (f"({', '.join(parts)})" if parts else "")

    def validate(self, grid) -> None:
        """Check that all referenced points and intervals fit ``grid``."""
        grid = check_grid(grid, min_points=2)
        lo, hi = grid[0], grid[-1]
        tol = _SPAN_TOL * (hi - lo)

        def inside(t):
            return lo - tol <= t <= hi + tol

        for key, value in self.params:
            if key in ("tau",):
                if not inside(value):
                    raise DataError(f"{self.label()}: tau outside the grid span")
            elif key in ("interval", "num_interval", "den_interval"):
                if not (inside(value[0]) and inside(value[1])):
                    raise DataError(f"{self.label()}: {key} outside the grid span")
                if _interval_mask(grid, value).sum() < 2:
                    raise DataError(
                        f"{self.label()}: {key} covers fewer than two grid points"
                    )
            elif key == "points":
                if not all(inside(t) for t in value):
                    raise DataError(f"{self.label()}: points outside the grid span")


def nearest_index(grid, t) -> np.ndarray:
    """Index of the grid point nearest to each ``t``; ties go to the earlier."""
    grid = np.asarray(grid, dtype=float)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    # argmin returns the first minimiser, i.e. the earlier grid point on ties
    return np.argmin(np.abs(grid[None, :] - t[:, None]), axis=1)


def _interval_mask(grid, interval) -> np.ndarray:
    lo, hi = interval
    tol = _SPAN_TOL * (grid[-1] - grid[0])
    return (grid >= lo - tol) & (grid <= hi + tol)


def weight_profile(grid, tau: float, sigma: float, scale: float = 300.0) -> np.ndarray:
    """Gaussian bump centred at ``tau``, rescaled so its grid maximum is ``scale``."""
    if sigma <= 0 or scale <= 0:
        raise ValueError("sigma and scale must be positive")
    grid = np.asarray(grid, dtype=float)
    z = (grid - tau) / sigma
    # normalising constants cancel in the rescaling; shifting the exponent by
    # its minimum keeps the peak at exp(0) and avoids underflow
    z2 = z**2
    phi = np.exp(-0.5 * (z2 - z2.min()))
    return scale * phi / phi.max()


def prepare(values, grid, order: int = 0, centered: bool = False) -> np.ndarray:
    """Centre (optional) and differentiate curves before a distance is taken.

    Centering acts on the original curve, so for ``order >= 1`` it has no
    effect on the derivative.
    """
    values = np.asarray(values, dtype=float)
    if centered:
        values = center(values, grid)
    return derive(values, grid, order)


def _integral(values, grid, mask=None):
    if mask is None:
        return np.trapezoid(values, grid, axis=-1)
    return np.trapezoid(values[..., mask], grid[mask], axis=-1)


def _area_ratio(values, grid, num_interval, den_interval):
    num = _integral(values, grid, _interval_mask(grid, num_interval))
    den = _integral(values, grid, _interval_mask(grid, den_interval))
    if np.any(den == 0):
        raise DataError("rel_areas: denominator integral is zero")
    return np.abs(num / den)


def scan_distance(x, y, grid, profile) -> float:
    """L2 distance of the weighted difference ``profile * (x - y)``."""
    d = np.asarray(profile) * (np.asarray(x) - np.asarray(y))
    return float(np.sqrt(max(np.trapezoid(d**2, grid), 0.0)))


def kernel(metric: SemiMetric, x, y, grid) -> float:
    """Evaluate ``metric`` on two already prepared curves."""
    grid = np.asarray(grid, dtype=float)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    kind = metric.kind
    if kind == "eucl":
        return float(np.sqrt(np.trapezoid((x - y) ** 2, grid)))
    if kind == "scan":
        profile = weight_profile(grid, metric["tau"], metric["sigma"], metric["scale"])
        return scan_distance(x, y, grid, profile)
    if kind == "short_eucl":
        mask = _interval_mask(grid, metric["interval"])
        return float(np.sqrt(_integral((x - y) ** 2, grid, mask)))
    if kind == "mean":
        return float(abs(_integral(x, grid) - _integral(y, grid)))
    if kind == "rel_areas":
        rx = _area_ratio(x, grid, metric["num_interval"], metric["den_interval"])
        ry = _area_ratio(y, grid, metric["num_interval"], metric["den_interval"])
        return float(abs(rx - ry))
    if kind == "jump":
        b, o = nearest_index(grid, metric["points"])
        return float(abs((x[b] - x[o]) - (y[b] - y[o])))
    if kind == "max":
        return float(abs(x.max() - y.max()))
    if kind == "min":
        return float(abs(x.min() - y.min()))
    if kind == "points":
        idx = nearest_index(grid, metric["points"])
        return float(np.mean(np.abs(x[idx] - y[idx])))
    raise ConfigError(f"unknown semi-metric kind {kind!r}")


def distance(metric: SemiMetric, x, y, grid, order: int = 0) -> float:
    """Semi-metric between two raw curves on the same grid.

    The curves are centred (if ``metric.centered``) and differentiated
    ``order`` times before the kernel is applied.
    """
    grid = check_grid(grid, min_points=2)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != grid.shape or y.shape != grid.shape:
        raise DataError(
            f"curves of length {x.size} and {y.size} do not match a grid of {grid.size}"
        )
    metric.validate(grid)
    xp = prepare(x, grid, order, metric.centered)
    yp = prepare(y, grid, order, metric.centered)
    return kernel(metric, xp, yp, grid)


def embed(metric: SemiMetric, values, grid):
    """Feature map turning ``metric`` into a standard distance.

    Returns ``(features, cdist_metric, factor)`` such that
    ``factor * cdist(F_x, F_y, cdist_metric)`` reproduces the semi-metric
    between the prepared curves in ``values``.
    """
    values = np.atleast_2d(np.asarray(values, dtype=float))
    grid = np.asarray(grid, dtype=float)
    kind = metric.kind
    if kind in ("eucl", "scan", "short_eucl"):
        if kind == "short_eucl":
            mask = _interval_mask(grid, metric["interval"])
            w = trapezoid_weights(grid[mask])
            return values[:, mask] * np.sqrt(w), "euclidean", 1.0
        w = trapezoid_weights(grid)
        if kind == "scan":
            w = w * weight_profile(grid, metric["tau"], metric["sigma"], metric["scale"]) ** 2
        return values * np.sqrt(w), "euclidean", 1.0
    if kind == "mean":
        feat = _integral(values, grid)
    elif kind == "rel_areas":
        feat = _area_ratio(values, grid, metric["num_interval"], metric["den_interval"])
    elif kind == "jump":
        b, o = nearest_index(grid, metric["points"])
        feat = values[:, b] - values[:, o]
    elif kind == "max":
        feat = values.max(axis=1)
    elif kind == "min":
        feat = values.min(axis=1)
    elif kind == "points":
        idx = nearest_index(grid, metric["points"])
        return values[:, idx], "cityblock", 1.0 / idx.size
    else:
        raise ConfigError(f"unknown semi-metric kind {kind!r}")
    return feat[:, None], "cityblock", 1.0


def pairwise(metric: SemiMetric, X, grid, Y=None) -> np.ndarray:
    """Distance matrix between prepared curves ``X`` (rows) and ``Y`` (columns)."""
    fx, how, factor = embed(metric, X, grid)
    fy = fx if Y is None else embed(metric, Y, grid)[0]
    return factor * cdist(fx, fy, how)
