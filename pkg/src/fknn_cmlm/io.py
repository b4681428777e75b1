"""Reading and writing curve datasets.

CSV layout: one file per covariate type whose header row holds the grid
values and whose remaining rows are curves; labels live in a separate file
with one 1-based integer class per row.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

import numpy as np

from .curves import CovariateType, Dataset
from .exceptions import ConfigError, DataError

PHONEME_CLASSES = ("aa", "ao", "dcl", "iy", "sh")


def read_covariate_csv(path, name: str | None = None) -> CovariateType:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            header = fh.readline()
        grid = np.array([float(x) for x in header.strip().split(",")])
        values = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except FileNotFoundError as err:
        raise DataError(f"data file not found: {path}") from err
    except ValueError as err:
        raise DataError(f"{path}: {err}") from err
    return CovariateType(name or path.stem, grid, values)


def read_labels(path) -> np.ndarray:
    path = Path(path)
    try:
        labels = np.loadtxt(path, ndmin=1)
    except FileNotFoundError as err:
        raise DataError(f"label file not found: {path}") from err
    except ValueError as err:
        raise DataError(f"{path}: {err}") from err
    if not np.all(labels == np.round(labels)):
        raise DataError(f"{path}: labels must be integers")
    return labels.astype(int)


def read_dataset(covariate_paths: Sequence, labels_path=None, names=None,
                 n_classes=None, require_all_classes=True) -> Dataset:
    names = names or [None] * len(covariate_paths)
    covs = tuple(read_covariate_csv(p, nm) for p, nm in zip(covariate_paths, names))
    labels = read_labels(labels_path) if labels_path is not None else None
    return Dataset(covs, labels, n_classes, require_all_classes=require_all_classes)


def write_covariate_csv(path, cov: CovariateType) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(repr(float(t)) for t in cov.grid) + "\n")
        np.savetxt(fh, cov.values, delimiter=",", fmt="%.17g")


def write_labels(path, labels) -> None:
    np.savetxt(path, np.asarray(labels, dtype=int), fmt="%d")


def write_dataset(directory, data: Dataset) -> list[Path]:
    """Write one CSV per covariate type plus ``labels.csv`` into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for cov in data.covariates:
        p = directory / f"{cov.name}.csv"
        write_covariate_csv(p, cov)
        paths.append(p)
    if data.labels is not None:
        write_labels(directory / "labels.csv", data.labels)
    return paths


def read_phoneme(path, classes: Sequence[str] = PHONEME_CLASSES) -> Dataset:
    """Read the ``phoneme.data`` file distributed with *The Elements of
    Statistical Learning* (columns ``row.names, x.1 .. x.256, g, speaker``).

    Labels are numbered in the order of ``classes``; the grid is the
    frequency index 1..256.
    """
    path = Path(path)
    lookup = {c: i + 1 for i, c in enumerate(classes)}
    rows, labels = [], []
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            xcols = [j for j, h in enumerate(header) if h.startswith("x.")]
            gcol = header.index("g")
            for rec in reader:
                if not rec:
                    continue
                rows.append([float(rec[j]) for j in xcols])
                labels.append(lookup[rec[gcol].strip()])
    except FileNotFoundError as err:
        raise DataError(f"phoneme data not found: {path}") from err
    except (KeyError, ValueError, StopIteration) as err:
        raise DataError(f"{path}: not in phoneme.data format ({err})") from err
    values = np.array(rows)
    grid = np.arange(1, values.shape[1] + 1, dtype=float)
    return Dataset((CovariateType("log_periodogram", grid, values),),
                   np.array(labels), len(classes))


def load_config_data(cfg) -> Dataset:
    """Dataset referenced by an :class:`~fknn_cmlm.config.ExperimentConfig`."""
    data = cfg.data
    fmt = data.get("format", "csv")
    if fmt == "esl_phoneme":
        if "path" not in data:
            raise ConfigError("esl_phoneme data need a 'path'")
        return read_phoneme(cfg.path(data["path"]))
    if fmt != "csv":
        raise ConfigError(f"unknown data format {fmt!r}")
    covs = data.get("covariates", [])
    if not covs:
        raise ConfigError("no covariate files configured")
    paths = [cfg.path(c["path"]) for c in covs]
    names = [c.get("name") for c in covs]
    if "labels" not in data:
        raise ConfigError("no label file configured")
    return read_dataset(paths, cfg.path(data["labels"]), names, data.get("n_classes"))
