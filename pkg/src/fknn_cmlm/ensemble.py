"""k-nearest-neighbour ensemble members and their posterior probabilities.

An ensemble member ("tuple") is one combination of semi-metric, derivative
order, neighbourhood size ``k`` and covariate type. For every observation it
yields the fraction of its ``k`` nearest learning curves in each class. The
feature tensor ``w`` has shape ``(n, G, p)``; the difference features
``v = w[:, :G-1] - w[:, G-1:]`` have shape ``(n, G-1, p)``.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .curves import Dataset
from .exceptions import DataError
from .semimetrics import SemiMetric, pairwise, prepare

logger = logging.getLogger(__name__)

# Distances are rounded to this many significant digits (relative to the
# largest distance of a matrix) before ranking, so that values equal up to
# floating point noise are treated as ties and broken by index.
TIE_DIGITS = 12

# Rows of a distance matrix ranked per chunk; bounds peak memory.
_CHUNK = 1024


@dataclass(frozen=True)
class TupleSpec:
    """One ensemble member.

    ``covariate`` is the 0-based index of the covariate type; ``id`` is the
    1-based position in the ensemble.
    """

    semimetric: SemiMetric
    order: int
    k: int
    covariate: int
    id: int

    def to_dict(self, covariate_names: Sequence[str] | None = None) -> dict:
        out = {
            "id": self.id,
            "semimetric": self.semimetric.to_dict(),
            "order": self.order,
            "k": self.k,
            "covariate": self.covariate + 1,
        }
        if covariate_names is not None:
            out["covariate_name"] = covariate_names[self.covariate]
        return out

    @classmethod
    def from_dict(cls, entry: dict) -> "TupleSpec":
        return cls(
            SemiMetric.from_dict(entry["semimetric"]),
            int(entry["order"]),
            int(entry["k"]),
            int(entry["covariate"]) - 1,
            int(entry["id"]),
        )


def enumerate_tuples(
    semimetrics: Sequence[Sequence[SemiMetric]],
    ks: Iterable[int],
    orders: Iterable[int],
    jump_all_orders: bool = False,
) -> list[TupleSpec]:
    """Enumerate the full ensemble grid.

    Ids run over derivative order (outermost), then ``k``, then covariate
    type, then semi-metric (innermost). ``semimetrics[r]`` lists the
    semi-metrics of covariate type ``r``. With ``jump_all_orders=False``,
    jump tuples are only generated for order 0; otherwise the ensemble size
    is ``q * R * M * O``.
    """
    ks = [int(k) for k in ks]
    orders = [int(a) for a in orders]
    if any(k < 1 for k in ks):
        raise DataError("k must be positive")
    if any(a < 0 for a in orders):
        raise DataError("derivative orders must be nonnegative")
    tuples = []
    for a, k in itertools.product(orders, ks):
        for r, metrics in enumerate(semimetrics):
            for metric in metrics:
                if metric.kind == "jump" and a != 0 and not jump_all_orders:
                    continue
                tuples.append(TupleSpec(metric, a, k, r, len(tuples) + 1))
    return tuples


def _rank(dist: np.ndarray, kmax: int) -> np.ndarray:
    """Column indices of the ``kmax`` smallest entries per row.

    Ties (after rounding to ``TIE_DIGITS`` relative digits) are broken by
    ascending column index.
    """
    finite = dist[np.isfinite(dist)]
    scale = finite.max() if finite.size and finite.max() > 0 else 1.0
    out = np.empty((dist.shape[0], kmax), dtype=np.int64)
    for start in range(0, dist.shape[0], _CHUNK):
        block = dist[start:start + _CHUNK]
        block = np.where(np.isfinite(block), np.round(block / scale, TIE_DIGITS), np.inf)
        out[start:start + _CHUNK] = np.argsort(block, axis=1, kind="stable")[:, :kmax]
    return out


def _prepared(data: Dataset, covariate: int, order: int, centered: bool) -> np.ndarray:
    cov = data.covariates[covariate]
    return prepare(cov.values, cov.grid, order, centered)


def neighborhood(
    tup: TupleSpec,
    target,
    learn: Dataset,
    exclude: int | None = None,
) -> np.ndarray:
    """Indices of the ``k`` learning curves nearest to ``target``.

    Parameters
    ----------
    tup : TupleSpec
    target : array of shape (Q,)
        Raw curve of covariate type ``tup.covariate``.
    learn : Dataset
    exclude : int, optional
        Learning index of the target itself; it is left out of the
        neighbourhood (leave-one-out).

    Ties are broken by ascending learning index.
    """
    cov = learn.covariates[tup.covariate]
    needed = tup.k + (exclude is not None)
    if cov.n < needed:
        raise DataError(f"tuple {tup.id}: need {needed} learning curves, have {cov.n}")
    target = np.asarray(target, dtype=float)
    if target.shape != cov.grid.shape:
        raise DataError("target curve does not match the learning grid")
    metric = tup.semimetric
    metric.validate(cov.grid)
    xs = prepare(cov.values, cov.grid, tup.order, metric.centered)
    xt = prepare(target[None, :], cov.grid, tup.order, metric.centered)
    d = pairwise(metric, xt, cov.grid, xs)
    if exclude is not None:
        d[0, exclude] = np.inf
    return _rank(d, tup.k)[0]


def _group_tuples(tuples: Sequence[TupleSpec]):
    """Group tuple positions sharing covariate, order and semi-metric."""
    groups: dict = {}
    for pos, tup in enumerate(tuples):
        groups.setdefault((tup.covariate, tup.order, tup.semimetric), []).append(pos)
    return groups


def _votes(neigh: np.ndarray, labels: np.ndarray, k: int, G: int) -> np.ndarray:
    """Class fractions among the first ``k`` neighbours of every row."""
    lab = labels[neigh[:, :k]] - 1
    counts = np.zeros((neigh.shape[0], G))
    np.add.at(counts, (np.repeat(np.arange(neigh.shape[0]), k), lab.ravel()), 1.0)
    return counts / k


def _featurize(tuples, learn: Dataset, new: Dataset | None, jobs: int) -> np.ndarray:
    if learn.labels is None:
        raise DataError("learning data need labels")
    G = learn.n_classes
    loo = new is None
    n_out = learn.n if loo else new.n
    w = np.zeros((n_out, G, len(tuples)))
    groups = _group_tuples(tuples)
    kmax_needed = max(t.k for t in tuples) + loo
    if learn.n < kmax_needed:
        raise DataError(
            f"k = {kmax_needed - loo} needs at least {kmax_needed} learning curves, "
            f"have {learn.n}"
        )
    prepared: dict = {}

    def get(data, r, a, centered):
        key = (id(data), r, a, centered)
        if key not in prepared:
            prepared[key] = _prepared(data, r, a, centered)
        return prepared[key]

    # prepare sequentially so the worker threads only read the cache
    for (r, a, metric) in groups:
        metric.validate(learn.covariates[r].grid)
        get(learn, r, a, metric.centered)
        if not loo:
            if new.covariates[r].values.shape[1] != learn.covariates[r].grid.size:
                raise DataError(f"covariate {r + 1}: new curves do not match the grid")
            get(new, r, a, metric.centered)

    def work(item):
        (r, a, metric), positions = item
        grid = learn.covariates[r].grid
        xs = get(learn, r, a, metric.centered)
        if loo:
            d = pairwise(metric, xs, grid)
            np.fill_diagonal(d, np.inf)
        else:
            d = pairwise(metric, get(new, r, a, metric.centered), grid, xs)
        kmax = max(tuples[p].k for p in positions)
        neigh = _rank(d, kmax)
        for p in positions:
            w[:, :, p] = _votes(neigh, learn.labels, tuples[p].k, G)

    items = list(groups.items())
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(work, items))
    else:
        for item in items:
            work(item)
    return w


def posteriors(tuples: Sequence[TupleSpec], learn: Dataset, jobs: int = 1) -> np.ndarray:
    """Leave-one-out posterior probabilities of the learning data.

    Returns ``w`` of shape ``(n, G, p)``: ``w[i, g, l]`` is the fraction of
    the ``k`` nearest neighbours of curve ``i`` (itself excluded) under tuple
    ``l`` whose label is ``g + 1``.
    """
    return _featurize(tuples, learn, None, jobs)


def posteriors_new(
    tuples: Sequence[TupleSpec], learn: Dataset, new: Dataset, jobs: int = 1
) -> np.ndarray:
    """Posterior probabilities of new observations w.r.t. the learning data."""
    if new.n_types != learn.n_types:
        raise DataError(
            f"new data have {new.n_types} covariate types, learning data {learn.n_types}"
        )
    return _featurize(tuples, learn, new, jobs)


def differences(w: np.ndarray) -> np.ndarray:
    """Differences to the reference (last) class, shape ``(n, G-1, p)``."""
    w = np.asarray(w, dtype=float)
    if w.ndim != 3 or w.shape[1] < 2:
        raise DataError("need a feature tensor of shape (n, G, p) with G >= 2")
    return w[:, :-1, :] - w[:, -1:, :]


def filter_zero_variance(v: np.ndarray, tuples: Sequence[TupleSpec]):
    """Drop tuples whose difference features are constant over observations.

    A tuple is removed when, for every class, the sample standard deviation
    of ``v[:, g, l]`` rounds to zero at 12 decimals.

    Returns
    -------
    v_kept, tuples_kept, removed_ids
    """
    v = np.asarray(v, dtype=float)
    if v.shape[0] > 1:
        sd = np.round(v.std(axis=0, ddof=1), 12)
    else:
        sd = np.zeros(v.shape[1:])
    keep = np.any(sd != 0, axis=0)
    if not keep.any():
        raise DataError("all ensemble members have zero variance")
    removed = [t.id for t, kept in zip(tuples, keep) if not kept]
    kept_tuples = [t for t, kept in zip(tuples, keep) if kept]
    return v[:, :, keep], kept_tuples, removed


def select(tuples: Sequence[TupleSpec], ids: Iterable[int]) -> list[TupleSpec]:
    """Tuples with the given ids, in ensemble order."""
    wanted = set(ids)
    return [t for t in tuples if t.id in wanted]


# -- caching ---------------------------------------------------------------


def dataset_hash(data: Dataset) -> str:
    h = hashlib.sha256()
    for cov in data.covariates:
        h.update(cov.name.encode())
        h.update(np.ascontiguousarray(cov.grid).tobytes())
        h.update(np.ascontiguousarray(cov.values).tobytes())
    if data.labels is not None:
        h.update(np.ascontiguousarray(data.labels, dtype=np.int64).tobytes())
    return h.hexdigest()


def tuples_hash(tuples: Sequence[TupleSpec]) -> str:
    payload = json.dumps([t.to_dict() for t in tuples], sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()


def save_features(path, w: np.ndarray, tuples: Sequence[TupleSpec]) -> Path:
    """Write a feature tensor as ``.npz`` or ``.csv`` (chosen by suffix).

    The CSV layout has one row per observation and columns ordered
    class-major, then tuple; headers read ``g<class>_l<tuple id>``.
    """
    path = Path(path)
    ids = np.array([t.id for t in tuples])
    tmp = path.with_name(path.name + ".tmp")
    if path.suffix == ".csv":
        n, G, p = w.shape
        header = ",".join(f"g{g + 1}_l{i}" for g in range(G) for i in ids)
        with open(tmp, "w", encoding="utf-8") as fh:
            np.savetxt(fh, w.reshape(n, G * p), delimiter=",", header=header,
                       comments="", fmt="%.17g")
    else:
        with open(tmp, "wb") as fh:
            np.savez(fh, w=w, ids=ids)
    tmp.replace(path)
    return path


def load_features(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a tensor written by :func:`save_features`; returns ``(w, ids)``."""
    path = Path(path)
    if path.suffix == ".csv":
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip().split(",")
        flat = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        classes = sorted({int(h.split("_")[0][1:]) for h in header})
        ids = [int(h.split("_l")[1]) for h in header if h.startswith("g1_")]
        G, p = len(classes), len(ids)
        return flat.reshape(flat.shape[0], G, p), np.array(ids)
    with np.load(path) as data:
        return data["w"], data["ids"]


def cached_posteriors(tuples, learn: Dataset, cache_dir=None, jobs: int = 1,
                      fmt: str = "npz") -> np.ndarray:
    """:func:`posteriors` with an on-disk cache keyed by data and tuples."""
    if cache_dir is None:
        return posteriors(tuples, learn, jobs)
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    key = hashlib.sha256((dataset_hash(learn) + tuples_hash(tuples)).encode()).hexdigest()
    path = cache_dir / f"features-{key[:24]}.{fmt}"
    if path.exists():
        w, ids = load_features(path)
        if list(ids) == [t.id for t in tuples]:
            logger.debug("feature cache hit %s", path)
            return w
    w = posteriors(tuples, learn, jobs)
    save_features(path, w, tuples)
    return w
