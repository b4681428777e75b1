"""Command line interface.

Subcommands::

    fknn-cmlm featurize --config CFG [--out DIR] [--cache DIR] [--jobs N]
    fknn-cmlm fit       --config CFG [--out DIR] [--cache DIR] [--jobs N]
    fknn-cmlm predict   --config CFG --fit FIT.json --data C1.csv [C2.csv ...]
    fknn-cmlm evaluate  --predictions P.csv --labels L.csv [--out DIR]
    fknn-cmlm replicate --config CFG [--seed S] [--jobs N] [--out DIR]

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric error.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import ensemble as ens
from .config import ExperimentConfig, load_config
from .curves import standardize
from .evaluation import five_number_summary, rfi, score
from .exceptions import ConfigError, DataError, NumericError
from .io import load_config_data, read_dataset, read_labels
from .model import FitResult, predict_labels, probabilities
from .pipeline import featurize, knn_vote, split_plan, train

logger = logging.getLogger("fknn_cmlm")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


def _atomic_write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)
    return path


def _write_json(path: Path, payload: dict) -> Path:
    return _atomic_write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _csv_text(header, rows, meta: dict) -> str:
    buf = io.StringIO()
    for key, value in meta.items():
        buf.write(f"# {key}: {value}\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(x) for x in row) + "\n")
    return buf.getvalue()


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return "" if np.isnan(x) else repr(float(x))
    return str(x)


def _meta(cfg: ExperimentConfig, seed: int) -> dict:
    return {"config_sha256": cfg.hash, "seed": seed, "version": __version__}


def _out_dir(args, cfg: ExperimentConfig) -> Path:
    return Path(args.out) if args.out else cfg.path(cfg.output)


def _cache_dir(args, cfg: ExperimentConfig):
    if args.cache:
        return Path(args.cache)
    return cfg.path(cfg.cache) if cfg.cache else None


def _grids(data) -> dict:
    return {c.name: c.grid for c in data.covariates}


def manifest(tuples, data) -> list[dict]:
    names = [c.name for c in data.covariates]
    return [t.to_dict(names) for t in tuples]


# -- featurize -------------------------------------------------------------


def cmd_featurize(args) -> int:
    cfg = load_config(args.config)
    seed = args.seed if args.seed is not None else cfg.seed
    data = load_config_data(cfg)
    tuples = cfg.tuples(_grids(data))
    out = _out_dir(args, cfg)
    meta = _meta(cfg, seed)
    _write_json(out / "manifest.json", {**meta, "n_tuples": len(tuples),
                                        "tuples": manifest(tuples, data)})
    if args.manifest_only:
        print(f"{len(tuples)} tuples -> {out / 'manifest.json'}")
        return EXIT_OK
    learn = standardize(data)[0] if cfg.standardize else data
    w = ens.cached_posteriors(tuples, learn, _cache_dir(args, cfg), args.jobs, cfg.feature_format)
    _, kept, removed = ens.filter_zero_variance(ens.differences(w), tuples)
    ens.save_features(out / f"features.{cfg.feature_format}", w, tuples)
    _write_json(out / "filter.json", {**meta, "n_tuples": len(tuples), "n_kept": len(kept),
                                      "removed_tuple_ids": removed})
    print(f"{len(tuples)} tuples, {len(removed)} removed, {len(kept)} kept -> {out}")
    return EXIT_OK


# -- fit -------------------------------------------------------------------


def _train_kwargs(cfg: ExperimentConfig, seed: int) -> dict:
    return dict(
        lambdas=cfg.lambda_values,
        lambda_size=cfg.lambda_size,
        lambda_ratio=cfg.lambda_ratio,
        solver=cfg.solver,
        do_standardize=cfg.standardize,
        aic_folds=cfg.aic_folds,
        seed=seed,
    )


def fit_report(model, cfg: ExperimentConfig, seed: int, data) -> dict:
    report = model.fit.to_dict()
    report.update(_meta(cfg, seed))
    report["scales"] = [float(s) for s in model.scales]
    report["covariates"] = [c.name for c in data.covariates]
    report["path"] = [{"lambda": r.lam, "df": r.df, "aic": r.aic, "loglik": r.loglik}
                      for r in model.path]
    if model.fit.df > 0:
        importance = rfi(model.fit.coef)
        report["rfi"] = {str(i): float(x) for i, x in zip(model.fit.tuple_ids, importance) if x > 0}
    else:
        report["rfi"] = {}
    return report


def cmd_fit(args) -> int:
    cfg = load_config(args.config)
    seed = args.seed if args.seed is not None else cfg.seed
    data = load_config_data(cfg)
    tuples = cfg.tuples(_grids(data))
    out = _out_dir(args, cfg)
    learn = standardize(data)[0] if cfg.standardize else data
    features = featurize(learn, tuples, args.jobs, _cache_dir(args, cfg), cfg.feature_format)
    lookup = {t.id: t for t in tuples}
    names = [c.name for c in data.covariates]
    for kind in cfg.penalties:
        model = train(data, tuples, kind, features=features, jobs=args.jobs,
                      **_train_kwargs(cfg, seed))
        report = fit_report(model, cfg, seed, data)
        _write_json(out / f"fit_{kind}.json", report)
        rows = sorted(report["rfi"].items(), key=lambda kv: -kv[1])
        table = [(tid, val, json.dumps(lookup[int(tid)].to_dict(names), sort_keys=True)
                  .replace(",", ";")) for tid, val in rows]
        _atomic_write(out / f"rfi_{kind}.csv",
                      _csv_text(["tuple_id", "rfi", "tuple"], table, _meta(cfg, seed)))
        print(f"{kind}: lambda={model.fit.lam:.6g} df={model.fit.df} "
              f"aic={model.fit.aic:.6g} -> {out / f'fit_{kind}.json'}")
    return EXIT_OK


# -- predict / evaluate ----------------------------------------------------


def cmd_predict(args) -> int:
    cfg = load_config(args.config)
    with open(args.fit, encoding="utf-8") as fh:
        report = json.load(fh)
    if report.get("config_sha256") != cfg.hash:
        logger.warning("fit artifact was produced with a different configuration")
    data = load_config_data(cfg)
    tuples = cfg.tuples(_grids(data))
    names = report.get("covariates") or [c.name for c in data.covariates]
    new = read_dataset(args.data, None, names, data.n_classes)
    if new.n_types != data.n_types:
        raise DataError(f"expected {data.n_types} covariate files, got {new.n_types}")
    for c_new, c_old in zip(new.covariates, data.covariates):
        if c_new.grid.shape != c_old.grid.shape or not np.allclose(c_new.grid, c_old.grid):
            raise DataError(f"covariate {c_old.name!r}: grid of new data differs")
    scales = np.asarray(report["scales"])
    learn = data.replace_covariates([c.with_values(c.values / s)
                                     for c, s in zip(data.covariates, scales)])
    new = new.replace_covariates([c.with_values(c.values / s)
                                  for c, s in zip(new.covariates, scales)])
    coef = FitResult.coef_from_dict(report)
    members = ens.select(tuples, report["tuple_ids"])
    if len(members) != len(report["tuple_ids"]):
        raise ConfigError("fit artifact references tuples missing from the configuration")
    w = ens.posteriors_new(members, learn, new, args.jobs)
    probs = probabilities(ens.differences(w), coef)
    labels = predict_labels(probs)
    G = probs.shape[1]
    rows = [(i + 1, *probs[i], labels[i]) for i in range(new.n)]
    out = Path(args.out) if args.out else cfg.path(cfg.output)
    path = out / "predictions.csv"
    _atomic_write(path, _csv_text(["index", *[f"prob_{g}" for g in range(1, G + 1)], "label"],
                                  rows, {"config_sha256": cfg.hash, "fit": Path(args.fit).name,
                                         "seed": report.get("seed")}))
    print(f"{new.n} predictions -> {path}")
    return EXIT_OK


def read_predictions(path):
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    header = lines[0].strip().split(",")
    table = np.loadtxt(lines[1:], delimiter=",", ndmin=2)
    pcols = [j for j, h in enumerate(header) if h.startswith("prob_")]
    return table[:, pcols], table[:, header.index("label")].astype(int)


def cmd_evaluate(args) -> int:
    probs, predicted = read_predictions(args.predictions)
    labels = read_labels(args.labels)
    if labels.size != predicted.size:
        raise DataError(f"{labels.size} labels for {predicted.size} predictions")
    rep = score(labels, probs, predicted)
    payload = {"brier": rep.brier, "mcr": rep.mcr, "n_test": rep.n_test,
               "predictions": str(args.predictions)}
    if args.out:
        _write_json(Path(args.out) / "scores.json", payload)
    print(json.dumps(payload, sort_keys=True))
    return EXIT_OK


# -- replicate -------------------------------------------------------------


def _plan_from_config(cfg: ExperimentConfig, labels, seed: int):
    rep = cfg.replication
    n_splits = int(rep.get("n_splits", 10))
    if "per_class" in rep:
        pc = rep["per_class"]
        return split_plan(labels, n_splits, seed, per_class=(int(pc["learn"]), int(pc["test"])))
    if "sizes" in rep:
        sz = rep["sizes"]
        return split_plan(labels, n_splits, seed, sizes=(int(sz["learn"]), int(sz["test"])))
    raise ConfigError("replication needs 'per_class' or 'sizes'")


def run_split(cfg: ExperimentConfig, data, tuples, split, seed: int, cache_dir=None):
    """Fit every configured penalty on one split; returns score and RFI rows."""
    split_id, learn_idx, test_idx = split
    learn = data.take(learn_idx)
    test = data.take(test_idx, require_all_classes=False)
    slearn, stest, _ = standardize(learn, test) if cfg.standardize else (learn, test, None)
    features = featurize(slearn, tuples, 1, cache_dir, cfg.feature_format)
    rows, coef_rows = [], []
    for kind in cfg.penalties:
        model = train(learn, tuples, kind, features=features, **_train_kwargs(cfg, seed))
        probs, labels = model.predict(test)
        rep = score(test.labels, probs, labels)
        rows.append((split_id, "cmlm", kind, rep.brier, rep.mcr, model.fit.df, model.fit.lam))
        if model.fit.df > 0:
            imp = rfi(model.fit.coef)
            coef_rows += [(split_id, kind, tid, val)
                          for tid, val in zip(model.fit.tuple_ids, imp) if val > 0]
    if cfg.baseline_k:
        probs, labels = knn_vote(learn, test, cfg.baseline_k, do_standardize=cfg.standardize)
        rep = score(test.labels, probs, labels)
        rows.append((split_id, f"knn_eucl_k{cfg.baseline_k}", "none", rep.brier, rep.mcr, 0,
                     float("nan")))
    return rows, coef_rows


def cmd_replicate(args) -> int:
    cfg = load_config(args.config)
    seed = args.seed if args.seed is not None else cfg.seed
    if args.splits is not None:
        cfg.replication["n_splits"] = args.splits
    data = load_config_data(cfg)
    tuples = cfg.tuples(_grids(data))
    out = _out_dir(args, cfg)
    meta = _meta(cfg, seed)
    plan = _plan_from_config(cfg, data.labels, seed)
    # the plan is on disk before any fitting so other methods can reuse it
    _write_json(out / "plan.json", {**meta, "splits": [
        {"split_id": s, "learn": li.tolist(), "test": ti.tolist()} for s, li, ti in plan]})
    cache_dir = _cache_dir(args, cfg)

    def job(split):
        return run_split(cfg, data, tuples, split, seed, cache_dir)

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(job, plan))
    else:
        results = [job(s) for s in plan]
    rows = [r for res in results for r in res[0]]
    coef_rows = [r for res in results for r in res[1]]
    header = ["split_id", "method", "penalty", "brier", "mcr", "df", "lambda"]
    _atomic_write(out / "replication.csv", _csv_text(header, rows, meta))
    _atomic_write(out / "coefficients.csv",
                  _csv_text(["split_id", "penalty", "tuple_id", "rfi"], coef_rows, meta))
    summary = []
    groups: dict = {}
    for r in rows:
        groups.setdefault((r[1], r[2]), []).append(r)
    for (method, kind), grp in groups.items():
        for metric, col in (("brier", 3), ("mcr", 4)):
            s = five_number_summary([g[col] for g in grp])
            summary.append((method, kind, metric, len(grp), s["min"], s["q1"], s["median"],
                            s["q3"], s["max"], s["mean"]))
    _atomic_write(out / "summary.csv", _csv_text(
        ["method", "penalty", "metric", "n", "min", "q1", "median", "q3", "max", "mean"],
        summary, meta))
    for line in summary:
        print(f"{line[0]:>14} {line[1]:>9} {line[2]:>5}: mean={line[9]:.4f} median={line[6]:.4f}")
    return EXIT_OK


# -- entry point -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fknn-cmlm", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--out", default=None)
        p.add_argument("--cache", default=None)

    p = sub.add_parser("featurize", help="compute the ensemble feature tensor")
    common(p)
    p.add_argument("--manifest-only", action="store_true",
                   help="only enumerate and decode the tuples")
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("fit", help="fit penalised models on the full data")
    common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="score new curves with a fitted model")
    common(p)
    p.add_argument("--fit", required=True, help="fit_<penalty>.json written by 'fit'")
    p.add_argument("--data", nargs="+", required=True, help="one CSV per covariate type")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="Brier score and MCR of predictions")
    common(p, config_required=False)
    p.add_argument("--predictions", required=True)
    p.add_argument("--labels", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("replicate", help="repeated learn/test splits")
    common(p)
    p.add_argument("--splits", type=int, default=None, help="override n_splits")
    p.set_defaults(func=cmd_replicate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be at least 1")
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, OSError) as err:
        print(f"data error: {err}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as err:
        print(f"numeric error: {err}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
