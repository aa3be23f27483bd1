import json
import os

import pytest

from eegcolor import BUILD_ID
from eegcolor.cli import main
from eegcolor.reduce import FeatureSubset


@pytest.fixture(scope="module")
def cohort_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cohort")
    assert main(["synth", "--seed", "7", "--out", str(d), "--subjects", "2",
                 "--repetitions", "5"]) == 0
    return d


def test_smoke_path(cohort_dir, tmp_path):
    assert main(["extract", "--in", str(cohort_dir), "--window", "200",
                 "--out", str(tmp_path)]) == 0
    assert (tmp_path / "features_200ms.csv").exists()
    out = tmp_path / "report"
    assert main(["evaluate", "--in", str(tmp_path), "--family", "rf",
                 "--feature-set", "all", "--jobs", "1", "--out", str(out)]) == 0
    for name in ("table_accuracy_all.csv", "table_mcc_all_200ms.csv", "cells.csv",
                 "summary.txt", "manifest.json", "results.json"):
        assert (out / name).exists(), name
    again = tmp_path / "again"
    assert main(["report", "--in", str(out / "results.json"), "--out", str(again)]) == 0
    assert (again / "summary.txt").read_text() == (out / "summary.txt").read_text()


def test_ingest_reduce_train_spectrogram(cohort_dir, tmp_path):
    assert main(["ingest", "--in", str(cohort_dir), "--out", str(tmp_path)]) == 0
    assert main(["extract", "--in", str(tmp_path), "--window", "1000"]) == 0
    feats = str(tmp_path / "features_1000ms.csv")
    assert main(["reduce", "--features", feats, "--method", "forward", "--family", "knn",
                 "--k", "3", "--out", str(tmp_path / "subset.txt")]) == 0
    sub = FeatureSubset.from_text((tmp_path / "subset.txt").read_text())
    assert len(sub.indices) == 3 and len(set(sub.indices)) == 3
    assert main(["reduce", "--features", feats, "--method", "ae", "--epochs", "5",
                 "--out", str(tmp_path / "ae.json")]) == 0
    assert main(["train", "--family", "knn", "--features", feats,
                 "--out", str(tmp_path / "model.json")]) == 0
    doc = json.loads((tmp_path / "model.json").read_text())
    assert doc["family"] == "knn" and len(doc["normalization"]["mean"]) == 86
    assert main(["spectrogram", "--epochs", str(tmp_path / "epochs.csv"), "--subject", "s01",
                 "--trial", "t1", "--epoch", "0", "--out", str(tmp_path / "spec.csv")]) == 0
    assert len((tmp_path / "spec.csv").read_text().splitlines()) == 24


def test_usage_errors(cohort_dir, tmp_path, capsys):
    assert main(["extract", "--in", str(cohort_dir), "--bogus-flag"]) == 1
    assert "--bogus-flag" in capsys.readouterr().err
    assert main(["extract", "--in", str(cohort_dir), "--window", "300"]) == 1
    assert main(["extract", "--in", str(tmp_path / "missing")]) == 1
    assert main([]) == 1


def test_config_file_and_override(cohort_dir, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# extraction settings\nwindow = 500, 1000\nartifact-threshold = none\n")
    assert main(["extract", "--in", str(cohort_dir), "--config", str(cfg),
                 "--out", str(tmp_path / "a")]) == 0
    assert sorted(os.listdir(tmp_path / "a")) == ["extract_manifest.json",
                                                  "features_1000ms.csv", "features_500ms.csv"]
    assert main(["extract", "--in", str(cohort_dir), "--config", str(cfg), "--window", "1000",
                 "--out", str(tmp_path / "b")]) == 0
    assert not (tmp_path / "b" / "features_500ms.csv").exists()
    cfg.write_text("colour = red\n")
    assert main(["extract", "--in", str(cohort_dir), "--config", str(cfg)]) == 1


def test_runtime_failure_exit_two(tmp_path):
    bad = tmp_path / "features_1000ms.csv"
    bad.write_text(",".join(["label", "subject", "trial", "window"]) + "\nRed,s1,t1,0\n")
    out = tmp_path / "report"
    assert main(["evaluate", "--in", str(tmp_path), "--out", str(out), "--jobs", "1"]) == 2
    assert (out / "failure_manifest.json").exists()


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert BUILD_ID in capsys.readouterr().out
