import json

import numpy as np
import pytest

from eegcolor.experiment import (CVReport, ExperimentConfig, ExperimentError,
                                 regime_splits, result_from_json, result_to_json,
                                 run_experiment, run_job)
from eegcolor.features import FeatureMatrix, ZScore
from eegcolor.models import ModelSpec, fit, predict_scores
from helpers import informative_fixture


def toy_matrix(n_subjects=2, n_per=15, p=86, seed=0, shift=1.5):
    rng = np.random.default_rng(seed)
    X, y, subj = [], [], []
    for s in range(n_subjects):
        labels = np.repeat(np.arange(3), n_per)
        Xs = rng.normal(size=(labels.size, p)) + s * 5.0
        Xs[:, :3] += np.eye(3)[labels] * shift * 2
        X.append(Xs)
        y.append(labels)
        subj += [f"s{s + 1:02d}"] * labels.size
    y = np.concatenate(y)
    return FeatureMatrix(np.vstack(X), y, subj, ["t1"] * y.size, np.arange(y.size),
                         window_ms=1000)


def test_cell_count():
    fm = toy_matrix()
    cfg = ExperimentConfig(windows=(500, 1000), feature_sets=("all",), families=("knn", "lr"))
    res = run_experiment(cfg, {500: fm, 1000: fm})
    assert len(res.reports) == 2 * 1 * 2 * 2
    assert res.report(1000, "all", "inter", "lr").groups == ("s01", "s02")


def test_regime_splits():
    fm = toy_matrix(n_subjects=3)
    intra = regime_splits(fm, "intra", ExperimentConfig())
    assert len(intra) == 15
    for group, _, tr, te in intra:
        assert set(fm.subjects[tr]) == set(fm.subjects[te]) == {group}
    inter = regime_splits(fm, "inter", ExperimentConfig())
    assert [g for g, *_ in inter] == ["s01", "s02", "s03"]
    for group, _, tr, te in inter:
        assert group not in set(fm.subjects[tr])


def test_normalization_fitted_on_training_rows_only():
    fm = toy_matrix()
    cfg = ExperimentConfig(windows=(1000,), feature_sets=("all",), families=("knn",),
                           regimes=("inter",))
    split = regime_splits(fm, "inter", cfg)[0]
    (res,) = run_job(cfg, fm, 1000, "inter", 0, split)
    _, _, tr, te = split
    z = ZScore().fit(fm.X[tr])
    m = fit(ModelSpec("knn"), z.transform(fm.X[tr]), fm.labels[tr], 3)
    np.testing.assert_array_equal(res.scores, predict_scores(m, z.transform(fm.X[te])))
    # a z-score fitted on all rows would move the held-out subject
    z_all = ZScore().fit(fm.X)
    assert not np.allclose(z_all.mean, z.mean)


def test_report_rows_use_subject_means():
    rep = CVReport(1000, "all", "intra", "rf", ("a", "b"),
                   {"accuracy": [[0.5, 0.7], [0.9, 0.9]], "auc": [[0.6], [0.8]],
                    "mcc": [[0.1], [0.3]]})
    (label, mean, std), (blabel, bmean, bstd) = rep.rows("accuracy")
    assert (label, blabel) == ("Avg Subject", "Best Subject")
    assert mean == pytest.approx(0.75) and std == pytest.approx(0.15)
    assert bmean == pytest.approx(0.9) and bstd == 0.0
    inter = CVReport(1000, "all", "inter", "rf", ("a", "b"), rep.values)
    assert [r[0] for r in inter.rows("mcc")] == ["Inter-subject"]


def test_failures_flush_manifest(tmp_path):
    fm = toy_matrix(n_per=6)
    cfg = ExperimentConfig(windows=(1000,), feature_sets=("all", "forward10"),
                           families=("knn",), regimes=("inter",), selection_folds=10)
    with pytest.raises(ExperimentError) as info:
        run_experiment(cfg, {1000: fm}, str(tmp_path))
    doc = json.loads((tmp_path / "failure_manifest.json").read_text())
    assert info.value.manifest == str(tmp_path / "failure_manifest.json")
    assert {f["error"] for f in doc["failures"]} == {"InsufficientData"}


def test_result_json_round_trip():
    fm = toy_matrix()
    cfg = ExperimentConfig(windows=(1000,), feature_sets=("all",), families=("knn",))
    res = run_experiment(cfg, {1000: fm})
    back = result_from_json(result_to_json(res))
    for a, b in zip(res.reports, back.reports):
        assert a.rows("auc") == b.rows("auc")
    assert result_to_json(back) == result_to_json(res)


def test_forward_subset_beats_autoencoder_on_informative_fixture():
    X, y, informative = informative_fixture(0)
    fm = FeatureMatrix(X, y, ["s01"] * y.size, ["t1"] * y.size, np.arange(y.size),
                       window_ms=1000)
    cfg = ExperimentConfig(windows=(1000,), feature_sets=("forward10", "ae10"),
                           families=("rf",), regimes=("intra",), selection_wrapper="knn",
                           model_params={"knn": {"k": 8}})
    res = run_experiment(cfg, {1000: fm})
    fwd = res.report(1000, "forward10", "intra", "rf").average("accuracy")[0]
    ae = res.report(1000, "ae10", "intra", "rf").average("accuracy")[0]
    assert fwd >= ae
