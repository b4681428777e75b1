import numpy as np
import pytest

from fknn_cmlm.curves import Dataset
from fknn_cmlm.ensemble import enumerate_tuples
from fknn_cmlm.exceptions import DataError
from fknn_cmlm.io import read_dataset, read_phoneme, write_dataset
from fknn_cmlm.optimizer import penalty_value
from fknn_cmlm.pipeline import knn_vote, refit, split_plan, train
from fknn_cmlm.semimetrics import SemiMetric
from fknn_cmlm.synthetic import make_bumps, make_periodograms

from conftest import assert_probabilities

METRICS = [SemiMetric.make("eucl"), SemiMetric.make("mean"), SemiMetric.make("max"),
           SemiMetric.make("scan", tau=0.25, sigma=0.1)]


@pytest.fixture(scope="module")
def split():
    data = make_bumps((15, 15, 15), n_points=25, noise=0.5, seed=4)
    learn = data.take(np.arange(0, 45, 3).tolist() + np.arange(1, 45, 3).tolist())
    test = data.take(np.arange(2, 45, 3), require_all_classes=False)
    return learn, test


@pytest.mark.parametrize("kind", ["lasso", "cs_lasso", "cs_cats"])
def test_train_and_predict(split, kind):
    learn, test = split
    tuples = enumerate_tuples([METRICS, METRICS], [1, 5], [0, 1])
    model = train(learn, tuples, kind, lambda_size=15)
    assert len(model.path) == 15 and model.fit.df > 0
    probs, labels = model.predict(test)
    assert_probabilities(probs)
    assert_probabilities(model.fit.probabilities)
    assert np.mean(labels == test.labels) > 0.6
    # standardisation makes the fit blind to a common rescaling of the data
    def scale(d, a):
        return d.replace_covariates([c.with_values(a * c.values) for c in d.covariates])

    other = train(scale(learn, 7.0), tuples, kind, lambda_size=15)
    np.testing.assert_allclose(other.predict_proba(scale(test, 7.0)), probs, atol=1e-10)
    # a cold refit at the selected lambda reaches the same objective
    again = refit(model, model.fit.lam)

    def objective(res):
        return -res.loglik + res.lam * penalty_value(res.coef, kind)

    assert objective(again) == pytest.approx(objective(model.fit), rel=1e-6)


def test_train_with_mean_aic(split):
    learn, _ = split
    tuples = enumerate_tuples([METRICS, METRICS], [1, 5], [0])
    model = train(learn, tuples, "lasso", lambda_size=8, aic_folds=3, seed=2)
    assert model.fit.lam in [r.lam for r in model.path]
    assert model.path[-1] is model.fit


def test_knn_vote(split):
    learn, test = split
    probs, labels = knn_vote(learn, test, k=5)
    assert_probabilities(probs)
    np.testing.assert_allclose(probs * 5, np.round(probs * 5))
    np.testing.assert_array_equal(labels, np.argmax(probs, axis=1) + 1)


def test_split_plan():
    labels = np.repeat([1, 2, 3], 10)
    plan = split_plan(labels, 4, seed=3, per_class=(6, 3))
    assert [s for s, _, _ in plan] == [1, 2, 3, 4]
    for _, learn, test in plan:
        assert not set(learn) & set(test)
        assert np.all(np.bincount(labels[learn])[1:] == 6)
        assert np.all(np.bincount(labels[test])[1:] == 3)
    again = split_plan(labels, 4, seed=3, per_class=(6, 3))
    assert all(np.array_equal(a[1], b[1]) for a, b in zip(plan, again))
    sized = split_plan(labels, 2, seed=3, sizes=(20, 10))
    assert all(len(l) == 20 and len(t) == 10 for _, l, t in sized)
    with pytest.raises(DataError):
        split_plan(labels, 1, seed=0, per_class=(8, 3))
    with pytest.raises(ValueError):
        split_plan(labels, 1, seed=0)


def test_dataset_csv_round_trip(tmp_path):
    data = make_bumps((3, 3, 3), n_points=12, seed=1)
    paths = write_dataset(tmp_path, data)
    back = read_dataset(paths, tmp_path / "labels.csv", ["bump", "step"])
    for a, b in zip(back.covariates, data.covariates):
        np.testing.assert_array_equal(a.values, b.values)
        np.testing.assert_array_equal(a.grid, b.grid)
    np.testing.assert_array_equal(back.labels, data.labels)
    with pytest.raises(DataError):
        read_dataset([tmp_path / "absent.csv"])


def test_read_phoneme_format(tmp_path):
    rng = np.random.default_rng(0)
    header = ["row.names"] + [f"x.{j}" for j in range(1, 257)] + ["g", "speaker"]
    lines = [",".join(header)]
    classes = ["aa", "ao", "dcl", "iy", "sh", "aa"]
    for i, g in enumerate(classes):
        vals = ",".join(f"{x:.5f}" for x in rng.normal(size=256))
        lines.append(f"{i + 1},{vals},{g},train.dr1.mcpm0.sa1")
    path = tmp_path / "phoneme.data"
    path.write_text("\n".join(lines) + "\n")
    data = read_phoneme(path)
    assert isinstance(data, Dataset) and data.n == 6 and data.n_classes == 5
    np.testing.assert_array_equal(data.labels, [1, 2, 3, 4, 5, 1])
    np.testing.assert_array_equal(data.covariates[0].grid, np.arange(1.0, 257.0))
    path.write_text("a,b\n1,2\n")
    with pytest.raises(DataError):
        read_phoneme(path)


def test_synthetic_generators_are_seeded():
    a = make_periodograms(3, n_freq=32, seed=5)
    b = make_periodograms(3, n_freq=32, seed=5)
    np.testing.assert_array_equal(a.covariates[0].values, b.covariates[0].values)
    assert a.n == 15 and a.n_classes == 5
