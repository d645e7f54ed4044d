import numpy as np
import pytest

from guavacade import (
    FileFormatError,
    fit_cascade,
    fit_classifier,
    load_model,
    predict_proba,
    save_model,
)
from guavacade.persist import dumps_model

from test_classifiers import ALL_KINDS, FAST_PARAMS


def fit_all_kinds(ds):
    models = [fit_classifier(k, ds, params=dict(FAST_PARAMS[k])) for k in ALL_KINDS]
    models.append(
        fit_cascade(ds, "rf", "gbdt-leaf", base_params={"n_trees": 4, "seed": 1},
                    refine_params={"n_iters": 3})
    )
    models.append(fit_cascade(ds, "gnb", "none"))
    return models


class TestRoundTrip:
    def test_every_kind_predicts_bit_identically_after_reload(self, small_blobs, tmp_path):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(100, small_blobs.d))
        path = tmp_path / "model.json"
        for model in fit_all_kinds(small_blobs):
            save_model(model, path)
            back = load_model(path)
            a = predict_proba(model, x)
            b = predict_proba(back, x)
            assert np.array_equal(a, b), f"{model.kind} round trip drifted"
            assert back.class_names == model.class_names
            assert back.kind == model.kind

    def test_save_is_deterministic(self, small_blobs, tmp_path):
        model = fit_classifier("rf", small_blobs, params={"n_trees": 3, "seed": 2})
        save_model(model, tmp_path / "a.json")
        save_model(load_model(tmp_path / "a.json"), tmp_path / "b.json")
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_cascade_envelope_nests_submodels(self, small_blobs):
        model = fit_cascade(small_blobs, "gnb", "gbdt-level",
                            refine_params={"n_iters": 2})
        import json

        doc = json.loads(dumps_model(model))
        assert doc["kind"] == "cascade"
        assert doc["params"]["base"]["kind"] == "gnb"
        assert doc["params"]["refine"]["kind"] == "gbdt"
        assert doc["params"]["tau"] == 0.8
        assert "base_fraction" in doc["params"]["route_stats"]


class TestBadFiles:
    def test_invalid_json_is_format_error(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text("{not json")
        with pytest.raises(FileFormatError):
            load_model(path)

    def test_wrong_schema_version(self, small_blobs, tmp_path):
        import json

        model = fit_classifier("gnb", small_blobs)
        path = tmp_path / "m.json"
        save_model(model, path)
        doc = json.loads(path.read_text())
        doc["schema_version"] = 99
        path.write_text(json.dumps(doc))
        with pytest.raises(FileFormatError):
            load_model(path)

    def test_unknown_kind(self, small_blobs, tmp_path):
        import json

        model = fit_classifier("gnb", small_blobs)
        path = tmp_path / "m.json"
        save_model(model, path)
        doc = json.loads(path.read_text())
        doc["kind"] = "mystery"
        path.write_text(json.dumps(doc))
        with pytest.raises(FileFormatError):
            load_model(path)

    def test_missing_params_key(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text('{"schema_version": 1, "kind": "gnb", "K": 2, "d": 2, '
                        '"class_names": ["a", "b"]}')
        with pytest.raises(FileFormatError):
            load_model(path)
