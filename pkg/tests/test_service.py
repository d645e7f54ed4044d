import json
import threading
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from guavacade import fit_cascade
from guavacade.cascade import cascade_predict
from guavacade.service import build_server

from conftest import make_blobs


@pytest.fixture(scope="module")
def served():
    ds = make_blobs(30, 5, 6.0, seed=17, names=["anthracnose", "fruit_fly", "healthy"])
    model = fit_cascade(ds, "rf", "gbdt-leaf",
                        base_params={"n_trees": 5, "seed": 2},
                        refine_params={"n_iters": 4})
    server = build_server(model, "127.0.0.1", 0)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield model, f"http://127.0.0.1:{server.server_port}", ds
    server.shutdown()
    server.server_close()


def get(url):
    try:
        with urllib.request.urlopen(url) as resp:
            return resp.status, json.loads(resp.read())
    except urllib.error.HTTPError as e:
        return e.code, json.loads(e.read())


def post(url, payload, raw=None):
    body = raw if raw is not None else json.dumps(payload).encode()
    req = urllib.request.Request(url, data=body, headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req) as resp:
            return resp.status, json.loads(resp.read())
    except urllib.error.HTTPError as e:
        return e.code, json.loads(e.read())


class TestHealthz:
    def test_reports_kind_and_dim(self, served):
        model, base_url, _ = served
        status, doc = get(base_url + "/healthz")
        assert status == 200
        assert doc == {"status": "ok", "kind": "cascade", "d": 5, "K": 3}

    def test_unknown_path_404(self, served):
        _, base_url, _ = served
        status, _ = get(base_url + "/nope")
        assert status == 404


class TestPredictEndpoint:
    def test_matches_library_prediction(self, served):
        model, base_url, ds = served
        x = ds.features[3]
        status, doc = post(base_url + "/v1/predict", {"features": [float(v) for v in x]})
        assert status == 200
        routed = cascade_predict(model, np.asarray(x, dtype=np.float64))
        assert doc["label"] == model.class_names[routed.label]
        assert doc["class_id"] == routed.label
        assert doc["confidence"] == routed.confidence
        assert doc["route"] == routed.route
        assert np.allclose(doc["probabilities"], routed.probabilities)

    def test_wrong_dimension_400(self, served):
        _, base_url, _ = served
        status, doc = post(base_url + "/v1/predict", {"features": [1.0, 2.0]})
        assert status == 400
        assert "expected 5" in doc["error"]

    def test_malformed_json_400(self, served):
        _, base_url, _ = served
        status, _ = post(base_url + "/v1/predict", None, raw=b"{not json")
        assert status == 400

    def test_non_numeric_features_400(self, served):
        _, base_url, _ = served
        status, _ = post(base_url + "/v1/predict", {"features": ["a"] * 5})
        assert status == 400

    def test_missing_features_key_400(self, served):
        _, base_url, _ = served
        status, _ = post(base_url + "/v1/predict", {"rows": [1, 2, 3, 4, 5]})
        assert status == 400

    def test_no_model_503(self):
        server = build_server(None, "127.0.0.1", 0)
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        try:
            url = f"http://127.0.0.1:{server.server_port}"
            assert get(url + "/healthz")[0] == 503
            assert post(url + "/v1/predict", {"features": [1.0]})[0] == 503
        finally:
            server.shutdown()
            server.server_close()

    def test_hundred_concurrent_identical_requests(self, served):
        _, base_url, ds = served
        payload = {"features": [float(v) for v in ds.features[0]]}
        with ThreadPoolExecutor(max_workers=32) as pool:
            results = list(pool.map(
                lambda _: post(base_url + "/v1/predict", payload), range(100)
            ))
        assert all(status == 200 for status, _ in results)
        docs = [doc for _, doc in results]
        assert all(doc == docs[0] for doc in docs)
