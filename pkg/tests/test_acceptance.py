"""Acceptance checks, one per criterion.

Each test records a single ``criterion <n>: PASS|FAIL|SKIP: <detail>`` line;
the lines are repeated in the terminal summary. Criteria that need data not
shipped with the package (the phoneme and cell chip measurements) are
skipped with the reason, and a clearly labelled synthetic stand-in is
reported separately where one exists.
"""

import csv
import json
import time
from pathlib import Path

import numpy as np
import pytest
import yaml

from fknn_cmlm import cli
from fknn_cmlm.config import load_config
from fknn_cmlm.curves import standardize
from fknn_cmlm.ensemble import differences, enumerate_tuples, filter_zero_variance, posteriors
from fknn_cmlm.evaluation import rfi, score
from fknn_cmlm.exceptions import ConfigError, DataError
from fknn_cmlm.io import load_config_data, read_phoneme
from fknn_cmlm.model import fit, lambda_max, log_likelihood, loglik_gradient, probabilities
from fknn_cmlm.optimizer import FistaConfig, PenaltySpec, prox_cats_nonneg, prox_lasso_nonneg
from fknn_cmlm.pipeline import featurize, knn_vote, split_plan, train
from fknn_cmlm.semimetrics import SemiMetric
from fknn_cmlm.synthetic import make_bumps, make_periodograms

from conftest import record_acceptance
from oracles import (
    cvxpy_cats,
    finite_difference_gradient,
    projected_gradient_lasso,
    prox_cats_bruteforce,
    prox_lasso_bruteforce,
    random_mlm_instance,
)

ROOT = Path(__file__).resolve().parents[1]
PHONEME = ROOT / "data" / "phoneme" / "phoneme.data"
CELLCHIP = ROOT / "data" / "cellchip"


def conclude(criterion, ok, detail):
    record_acceptance(criterion, "PASS" if ok else "FAIL", detail)
    assert ok, detail


def skip(criterion, reason):
    record_acceptance(criterion, "SKIP", reason)
    pytest.skip(reason)


def toy_config(tmp_path, **model):
    raw = yaml.safe_load((ROOT / "configs" / "toy.yaml").read_text())
    toy = ROOT / "data" / "toy"
    raw["data"]["covariates"] = [{"name": n, "path": str(toy / f"{n}.csv")}
                                 for n in ("bump", "step")]
    raw["data"]["labels"] = str(toy / "labels.csv")
    raw["model"].update(model)
    path = tmp_path / "toy.yaml"
    path.write_text(yaml.safe_dump(raw))
    return path


def test_criterion_1_prox_oracle():
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        d = int(rng.integers(1, 6))
        u = rng.normal(scale=3.0, size=d)
        t = float(rng.exponential(1.0))
        worst = max(worst,
                    np.max(np.abs(prox_lasso_nonneg(u, t) - prox_lasso_bruteforce(u, t))),
                    np.max(np.abs(prox_cats_nonneg(u, t) - prox_cats_bruteforce(u, t))))
    elapsed = time.perf_counter() - start
    conclude(1, worst <= 1e-6 and elapsed < 60,
             f"1000 instances, max |prox - brute force| = {worst:.2e} (tol 1e-6), "
             f"{elapsed:.1f} s (limit 60 s)")


def test_criterion_2_gradient():
    rng = np.random.default_rng(2)
    worst = 0.0
    for i in range(50):
        G = int(rng.integers(2, 5))
        v, labels = random_mlm_instance(rng, n=int(rng.integers(G, 51)),
                                        p=int(rng.integers(1, 11)), G=G)
        shape = v.shape[2] if i % 2 else v.shape[1:]
        coef = rng.uniform(0, 1, size=shape)
        fd = finite_difference_gradient(lambda c: log_likelihood(v, labels, c), coef, h=1e-5)
        an = loglik_gradient(v, labels, coef)
        worst = max(worst, np.max(np.abs(an - fd)) / max(1.0, np.max(np.abs(fd))))
    conclude(2, worst <= 1e-5,
             f"50 instances (global and class-specific), max relative error {worst:.2e} "
             f"(tol 1e-5)")


def test_criterion_3_solver_optimality():
    rng = np.random.default_rng(3)
    config = FistaConfig(max_iters=100_000, tol=1e-14)
    gaps, feasible, null_ok = [], True, True
    for kind in ("lasso", "cs_lasso", "cs_cats"):
        for _ in range(4):
            v, labels = random_mlm_instance(rng, n=30, p=5, G=3)
            lmax = lambda_max(v, labels, kind)
            lam = float(rng.uniform(0.05, 0.6)) * lmax
            res = fit(v, labels, PenaltySpec(kind, lam), config)
            feasible &= bool(np.all(res.coef >= 0))
            if kind == "cs_cats":
                _, ref = cvxpy_cats(v, labels, lam)
                obj = -res.loglik + lam * np.sqrt(2) * np.linalg.norm(res.coef, axis=0).sum()
            else:
                _, ref = projected_gradient_lasso(v, labels, lam, kind != "lasso")
                obj = -res.loglik + lam * res.coef.sum()
            gaps.append(obj - ref)
            for factor in (1.0, 1.5, 10.0):
                null_ok &= fit(v, labels, PenaltySpec(kind, factor * lmax), config).df == 0
    worst = max(abs(g) for g in gaps)
    conclude(3, worst <= 1e-6 and feasible and null_ok,
             f"12 instances over 3 penalties: max |objective - oracle| = {worst:.2e} "
             f"(tol 1e-6), c >= 0: {feasible}, df = 0 for lambda >= lambda_max: {null_ok}")


def test_criterion_4_ensemble_counts():
    cfg = load_config(ROOT / "configs" / "phoneme.yaml")
    tuples = cfg.tuples({"log_periodogram": np.arange(1.0, 257.0)})
    if not PHONEME.exists():
        ok = len(tuples) == 816
        record_acceptance(4, "PASS" if ok else "FAIL",
                          f"{len(tuples)} tuples before filtering (expected 816); the 800 after "
                          f"filtering needs {PHONEME.relative_to(ROOT)}, which is not present")
        assert ok
        return
    data = read_phoneme(PHONEME)
    learn = standardize(data)[0]
    _, kept, removed = featurize(learn, tuples, jobs=4)
    conclude(4, len(tuples) == 816 and len(kept) == 800,
             f"{len(tuples)} tuples before filtering (expected 816), {len(kept)} after "
             f"(expected 800)")


def test_criterion_5_probability_feasibility():
    data = make_bumps((10, 10, 10), n_points=20, noise=0.5, seed=5)
    learn = data.take(np.r_[0:7, 10:17, 20:27])
    new = data.take(np.r_[7:10, 17:20, 27:30], require_all_classes=False)
    metrics = [SemiMetric.make("eucl"), SemiMetric.make("max"), SemiMetric.make("mean")]
    tuples = enumerate_tuples([metrics, metrics], [1, 3], [0, 1])
    worst, checked = 0.0, 0
    outside = False
    for kind in ("lasso", "cs_lasso", "cs_cats"):
        model = train(learn, tuples, kind, lambda_size=10)
        blocks = [r.probabilities for r in model.path] + [model.predict_proba(new)]
        # extreme class-specific weights on held-out data
        v_new = differences(posteriors(tuples, standardize(learn)[0]))
        blocks.append(probabilities(v_new, np.full((2, len(tuples)), 300.0)))
        for probs in blocks:
            outside |= bool(np.any(probs < 0) or np.any(probs > 1))
            worst = max(worst, float(np.max(np.abs(probs.sum(axis=1) - 1))))
            checked += probs.shape[0]
    conclude(5, not outside and worst <= 1e-10,
             f"{checked} probability rows from fits, held-out predictions and extreme "
             f"class-specific weights: all in [0, 1], max |row sum - 1| = {worst:.1e}")


def _replication_means(path):
    rows = [r for r in csv.DictReader(ln for ln in open(path) if not ln.startswith("#"))]
    out = {}
    for r in rows:
        key = r["penalty"] if r["method"] == "cmlm" else r["method"]
        out.setdefault(key, []).append((float(r["brier"]), float(r["mcr"])))
    return {k: np.mean(v, axis=0) for k, v in out.items()}


@pytest.mark.slow
def test_criterion_6_phoneme_performance(tmp_path):
    if not PHONEME.exists():
        skip(6, f"phoneme data not present at {PHONEME.relative_to(ROOT)} "
                "(see README for how to obtain it); see the synthetic stand-in below")
    start = time.perf_counter()
    raw = yaml.safe_load((ROOT / "configs" / "phoneme.yaml").read_text())
    raw["data"]["path"] = str(PHONEME)
    raw["model"]["penalties"] = ["lasso", "cs_lasso"]
    cfg = tmp_path / "phoneme.yaml"
    cfg.write_text(yaml.safe_dump(raw))
    assert cli.main(["replicate", "--config", str(cfg), "--out", str(tmp_path), "--jobs", "4"]) == 0
    means = _replication_means(tmp_path / "replication.csv")
    lasso, cs, knn = means["lasso"], means["cs_lasso"], means["knn_eucl_k5"]
    elapsed = time.perf_counter() - start
    conclude(6, lasso[1] < knn[1] and cs[0] <= lasso[0] + 0.01,
             f"10 splits: mean MCR lasso {lasso[1]:.4f} vs 5-NN {knn[1]:.4f}; mean Brier "
             f"cs-lasso {cs[0]:.4f} vs lasso {lasso[0]:.4f} (+0.01 slack); {elapsed / 60:.1f} min")


@pytest.mark.slow
def test_criterion_6_synthetic_stand_in():
    """Same comparison on simulated log-periodograms (not the phoneme data)."""
    data = make_periodograms(100, seed=2017)
    cfg = load_config(ROOT / "configs" / "phoneme.yaml")
    tuples = cfg.tuples({"log_periodogram": data.covariates[0].grid})
    scores = {"lasso": [], "cs_lasso": [], "knn": []}
    for _, li, ti in split_plan(data.labels, 5, 20170101, per_class=(40, 60)):
        learn, test = data.take(li), data.take(ti, require_all_classes=False)
        features = featurize(standardize(learn)[0], tuples)
        for kind in ("lasso", "cs_lasso"):
            model = train(learn, tuples, kind, features=features)
            probs, labels = model.predict(test)
            scores[kind].append(score(test.labels, probs, labels))
        probs, labels = knn_vote(learn, test, 5)
        scores["knn"].append(score(test.labels, probs, labels))
    mean = {k: (np.mean([s.brier for s in v]), np.mean([s.mcr for s in v]))
            for k, v in scores.items()}
    ok = mean["lasso"][1] < mean["knn"][1] and mean["cs_lasso"][0] <= mean["lasso"][0] + 0.01
    record_acceptance("6 (synthetic stand-in, not the phoneme data)", "PASS" if ok else "FAIL",
                      f"5 splits of 40/60 curves per class: mean MCR lasso {mean['lasso'][1]:.4f} "
                      f"vs 5-NN {mean['knn'][1]:.4f}; mean Brier cs-lasso "
                      f"{mean['cs_lasso'][0]:.4f} vs lasso {mean['lasso'][0]:.4f}")
    assert ok


def test_criterion_7_rfi(tmp_path):
    cfg = toy_config(tmp_path)
    assert cli.main(["fit", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    sums = []
    for kind in ("lasso", "cs_lasso", "cs_cats"):
        report = json.loads((tmp_path / f"fit_{kind}.json").read_text())
        if report["rfi"]:
            sums.append(sum(report["rfi"].values()))
    rng = np.random.default_rng(7)
    invariant = True
    for _ in range(200):
        shape = (int(rng.integers(1, 5)), int(rng.integers(1, 20)))
        c = rng.exponential(size=shape) * (rng.uniform(size=shape) < 0.5)
        c[0, 0] += 0.1
        for coef in (c, c[0]):
            r = rfi(coef)
            sums.append(r.sum())
            invariant &= bool(np.allclose(rfi(float(rng.uniform(1e-3, 1e3)) * coef), r,
                                          rtol=1e-12, atol=1e-12))
    worst = max(abs(s - 100.0) for s in sums)
    conclude(7, worst <= 1e-9 and invariant,
             f"{len(sums)} RFI vectors (3 CLI reports + random), max |sum - 100| = "
             f"{worst:.1e} (tol 1e-9), scale invariant: {invariant}")


def test_criterion_8_determinism(tmp_path):
    cfg = toy_config(tmp_path)
    for name in ("a", "b"):
        assert cli.main(["replicate", "--config", str(cfg), "--out", str(tmp_path / name)]) == 0
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    same = all((tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
               for f in files)
    conclude(8, same, f"two replicate runs with seed 11: {len(files)} files "
                      f"({', '.join(files)}) byte-identical: {same}")


def test_criterion_9_cellchip():
    cfg = load_config(ROOT / "configs" / "cellchip.yaml")
    try:
        data = load_config_data(cfg)
    except (ConfigError, DataError):
        data = None
    if data is None:
        grid = 3.12 + 6.0 * np.arange(89)
        n = len(cfg.tuples({"ISFET": grid, "IDES": grid}))
        skip(9, f"cell chip data not present under {CELLCHIP.relative_to(ROOT)}; "
                f"configuration alone gives {n} tuples (expected 1248); the 80/1168 filter "
                f"split and the lambda = 1.9 fit need the data")
    tuples = cfg.tuples({c.name: c.grid for c in data.covariates})
    learn = standardize(data)[0]
    v, kept, removed = filter_zero_variance(differences(posteriors(tuples, learn)), tuples)
    res = fit(v, learn.labels, PenaltySpec("lasso", 1.9), cfg.solver,
              tuple_ids=[t.id for t in kept])
    ok = (len(tuples), len(removed), len(kept)) == (1248, 80, 1168) and abs(res.df - 8) <= 4
    conclude(9, ok, f"tuples {len(tuples)}/{len(removed)}/{len(kept)} (expected 1248/80/1168), "
                    f"{res.df} nonzero coefficients at lambda = 1.9 (expected 8 +- 4)")
