import csv
import json

import numpy as np
import pytest

from guavacade import (
    load_model,
    read_feature_file,
    write_feature_file,
    write_feature_map_file,
    write_manifest,
    write_ppm,
)
from guavacade.cascade import cascade_predict_batch
from guavacade.cli import run_command
from guavacade.data import Manifest

from conftest import make_blobs


@pytest.fixture(scope="module")
def fvec(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli-data")
    ds = make_blobs(40, 6, 6.0, seed=5, names=["anthracnose", "fruit_fly", "healthy"])
    path = root / "all.fvec"
    write_feature_file(ds, path)
    return path


def run(*argv):
    return run_command([str(a) for a in argv])


class TestSplitBalance:
    def test_split_writes_stratified_files(self, fvec, tmp_path):
        tr, ho = tmp_path / "tr.fvec", tmp_path / "ho.fvec"
        assert run("split", "--in", fvec, "--ratio", "0.8", "--seed", "7",
                   "--train-out", tr, "--holdout-out", ho) == 0
        train, holdout = read_feature_file(tr), read_feature_file(ho)
        assert train.class_counts().tolist() == [32, 32, 32]
        assert holdout.class_counts().tolist() == [8, 8, 8]

    def test_balance_equalizes_counts(self, tmp_path):
        rng = np.random.default_rng(0)
        from guavacade import Dataset

        ds = Dataset(rng.normal(size=(60, 3)).astype(np.float32),
                     np.repeat([0, 1, 2], [10, 20, 30]), ["a", "b", "c"])
        src, out = tmp_path / "in.fvec", tmp_path / "out.fvec"
        write_feature_file(ds, src)
        assert run("balance", "--in", src, "--seed", "1", "--out", out) == 0
        assert read_feature_file(out).class_counts().tolist() == [10, 10, 10]


@pytest.fixture(scope="module")
def artifacts(fvec, tmp_path_factory):
    root = tmp_path_factory.mktemp("cli-run")
    tr, ho = root / "tr.fvec", root / "ho.fvec"
    model, report = root / "model.json", root / "report.json"
    assert run("split", "--in", fvec, "--ratio", "0.8", "--seed", "7",
               "--train-out", tr, "--holdout-out", ho) == 0
    assert run("train", "--features", tr, "--base", "ada", "--refine", "gbdt-leaf",
               "--tau", "0.8", "--seed", "3", "--n-estimators", "10",
               "--gbdt-iters", "8", "--out", model) == 0
    assert run("eval", "--model", model, "--features", ho, "--report", report) == 0
    return {"train": tr, "holdout": ho, "model": model, "report": report}


class TestTrainEvalPredict:
    def test_report_has_table_metrics(self, artifacts):
        doc = json.loads(artifacts["report"].read_text())
        assert doc["model_kind"] == "cascade"
        assert 0.0 <= doc["metrics"]["accuracy"] <= 1.0
        assert {m["name"] for m in doc["metrics"]["per_class"]} == {
            "anthracnose", "fruit_fly", "healthy"}
        assert set(doc["metrics"]["weighted"]) == {"precision", "recall", "f1"}
        assert doc["cascade"]["tau"] == 0.8
        assert doc["config"]["command"] == "eval"
        assert "timings_omitted" in doc["flags"]
        assert doc["timing"]["infer_total_s"] is None

    def test_report_text_matrix_beside_json(self, artifacts):
        cm_path = artifacts["report"].with_name("report.cm.txt")
        text = cm_path.read_text()
        assert "anthracnose" in text and "true\\pred" in text

    def test_timings_flag_fills_timing_section(self, artifacts, tmp_path):
        report = tmp_path / "timed.json"
        assert run("eval", "--model", artifacts["model"], "--features",
                   artifacts["holdout"], "--report", report, "--timings") == 0
        doc = json.loads(report.read_text())
        assert doc["timing"]["infer_total_s"] > 0
        assert doc["timing"]["infer_per_sample_s"] > 0

    def test_predict_csv_matches_batch_api(self, artifacts, tmp_path):
        out = tmp_path / "preds.csv"
        assert run("predict", "--model", artifacts["model"], "--features",
                   artifacts["holdout"], "--out", out) == 0
        model = load_model(artifacts["model"])
        ds = read_feature_file(artifacts["holdout"])
        labels, gamma, routes, _ = cascade_predict_batch(model, ds.features)
        with open(out, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["index", "label", "confidence", "route"]
        assert len(rows) == ds.n + 1
        for i, row in enumerate(rows[1:]):
            assert int(row[0]) == i
            assert row[1] == model.class_names[labels[i]]
            assert float(row[2]) == gamma[i]
            assert row[3] == routes[i]

    def test_determinism_across_runs_and_workers(self, artifacts, tmp_path):
        # identical argv (same output paths, overwritten) except --workers,
        # which must not influence any produced byte
        model, report = tmp_path / "model.json", tmp_path / "report.json"
        snapshots = []
        for workers in ("1", "8", "1"):
            assert run("train", "--features", artifacts["train"], "--base", "rf",
                       "--refine", "gbdt-leaf", "--seed", "11", "--n-trees", "6",
                       "--gbdt-iters", "5", "--workers", workers, "--out", model) == 0
            assert run("eval", "--model", model, "--features", artifacts["holdout"],
                       "--report", report) == 0
            snapshots.append((model.read_bytes(), report.read_bytes()))
        assert snapshots[0] == snapshots[1] == snapshots[2]


class TestExtract:
    def test_baseline_extract_from_manifest(self, tmp_path):
        rng = np.random.default_rng(2)
        img_dir = tmp_path / "imgs"
        img_dir.mkdir()
        entries = []
        for i, label in enumerate(["sick", "fine", "sick", "fine"]):
            name = f"img_{i}.ppm"
            write_ppm(img_dir / name, rng.integers(0, 256, size=(12, 10, 3)).astype(np.uint8))
            entries.append((f"imgs/{name}", label))
        manifest_path = tmp_path / "m.csv"
        write_manifest(Manifest(entries), manifest_path)
        out = tmp_path / "features.fvec"
        assert run("extract", "--manifest", manifest_path, "--out", out,
                   "--image-side", "16") == 0
        ds = read_feature_file(out)
        assert (ds.n, ds.d) == (4, 102)
        assert ds.class_names == ["fine", "sick"]
        assert ds.labels.tolist() == [1, 0, 1, 0]

    def test_gap_extract_from_maps(self, tmp_path):
        rng = np.random.default_rng(3)
        maps = rng.normal(size=(5, 3, 3, 7)).astype(np.float32)
        fmap = tmp_path / "maps.fmap"
        write_feature_map_file(fmap, maps, labels=[0, 1, 0, 1, 1], class_names=["a", "b"])
        out = tmp_path / "pooled.fvec"
        assert run("extract", "--maps", fmap, "--out", out) == 0
        ds = read_feature_file(out)
        assert (ds.n, ds.d) == (5, 7)
        expected = maps.mean(axis=(1, 2), dtype=np.float64).astype(np.float32)
        assert np.array_equal(ds.features, expected)

    def test_requires_exactly_one_source(self, tmp_path):
        assert run("extract", "--out", tmp_path / "x.fvec") == 1


class TestConfigPrecedence:
    def test_flags_beat_config_beat_defaults(self, fvec, tmp_path):
        config = tmp_path / "run.cfg"
        config.write_text(
            "# pipeline settings\n"
            "ratio = 0.5\n"
            "seed = 9\n"
            "train-out = {0}\n"
            "holdout-out = {1}\n".format(tmp_path / "tr.fvec", tmp_path / "ho.fvec")
        )
        # --ratio on the command line overrides the config file's 0.5
        assert run("split", "--config", config, "--in", fvec, "--ratio", "0.8") == 0
        train = read_feature_file(tmp_path / "tr.fvec")
        assert train.class_counts().tolist() == [32, 32, 32]

    def test_config_supplies_required_values(self, fvec, tmp_path):
        config = tmp_path / "run.cfg"
        config.write_text(
            f"in = {fvec}\ntrain-out = {tmp_path / 'a.fvec'}\n"
            f"holdout-out = {tmp_path / 'b.fvec'}\n"
        )
        assert run("split", "--config", config) == 0

    def test_underscore_keys_accepted(self, fvec, tmp_path):
        config = tmp_path / "run.cfg"
        config.write_text(
            f"in = {fvec}\ntrain_out = {tmp_path / 'a.fvec'}\n"
            f"holdout_out = {tmp_path / 'b.fvec'}\n"
        )
        assert run("split", "--config", config) == 0

    def test_malformed_config_line(self, fvec, tmp_path):
        config = tmp_path / "run.cfg"
        config.write_text("this is not a key value pair\n")
        assert run("split", "--config", config, "--in", fvec) == 1


class TestExitCodes:
    def test_unknown_subcommand(self):
        assert run("frobnicate") == 1

    def test_unknown_flag(self, fvec):
        assert run("split", "--in", fvec, "--frob", "yes") == 1

    def test_missing_required_option(self, fvec):
        assert run("split", "--in", fvec) == 1

    def test_missing_input_file_is_io_error(self, tmp_path):
        assert run("split", "--in", tmp_path / "nope.fvec", "--train-out",
                   tmp_path / "a", "--holdout-out", tmp_path / "b") == 2

    def test_corrupt_model_is_format_error(self, fvec, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{")
        assert run("eval", "--model", bad, "--features", fvec,
                   "--report", tmp_path / "r.json") == 2

    def test_bad_ratio_is_validation_error(self, fvec, tmp_path):
        assert run("split", "--in", fvec, "--ratio", "1.5", "--train-out",
                   tmp_path / "a", "--holdout-out", tmp_path / "b") == 1

    def test_dimension_mismatch_on_eval(self, fvec, tmp_path):
        ds = make_blobs(10, 3, 5.0, seed=1)
        other = tmp_path / "other.fvec"
        write_feature_file(ds, other)
        model = tmp_path / "m.json"
        assert run("train", "--features", fvec, "--base", "gnb", "--refine", "none",
                   "--out", model) == 0
        assert run("eval", "--model", model, "--features", other,
                   "--report", tmp_path / "r.json") == 1

    def test_help_exits_zero(self):
        assert run("--help") == 0
