"""Stateless prediction endpoint over a model fixed at startup.

POST /v1/predict with {"features": [f_1 .. f_d]} answers with the routed
prediction; GET /healthz reports the loaded model kind and input dimension.
The model is immutable, so concurrent requests share it freely.
"""

import json
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from .cascade import CascadeModel, cascade_predict
from .classifiers import predict_proba


def predict_payload(model, features) -> dict:
    """Route one feature vector and shape the response body."""
    x = np.asarray(features, dtype=np.float64)
    if isinstance(model, CascadeModel):
        routed = cascade_predict(model, x)
        label, probs = routed.label, routed.probabilities
        conf, route = routed.confidence, routed.route
    else:
        probs = predict_proba(model, x)
        label = int(np.argmax(probs))
        conf, route = float(probs.max()), "base"
    return {
        "label": model.class_names[label],
        "class_id": label,
        "confidence": conf,
        "route": route,
        "probabilities": [float(p) for p in probs],
    }


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):  # stay quiet; diagnostics are the caller's job
        pass

    def _send(self, status: int, body: dict) -> None:
        raw = json.dumps(body).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(raw)))
        self.end_headers()
        self.wfile.write(raw)

    def do_GET(self):
        model = self.server.model
        if self.path != "/healthz":
            self._send(404, {"error": f"unknown path {self.path}"})
            return
        if model is None:
            self._send(503, {"error": "no model loaded"})
            return
        self._send(200, {"status": "ok", "kind": model.kind, "d": model.d, "K": model.k})

    def do_POST(self):
        model = self.server.model
        if self.path != "/v1/predict":
            self._send(404, {"error": f"unknown path {self.path}"})
            return
        if model is None:
            self._send(503, {"error": "no model loaded"})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            body = json.loads(self.rfile.read(length).decode("utf-8"))
        except (ValueError, UnicodeDecodeError):
            self._send(400, {"error": "request body is not valid JSON"})
            return
        features = body.get("features") if isinstance(body, dict) else None
        if not isinstance(features, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in features
        ):
            self._send(400, {"error": 'body must be {"features": [numbers]}'})
            return
        if len(features) != model.d:
            self._send(400, {"error": f"expected {model.d} features, got {len(features)}"})
            return
        self._send(200, predict_payload(model, features))


def build_server(model, host: str = "127.0.0.1", port: int = 8000) -> ThreadingHTTPServer:
    """Create (but do not start) the HTTP server; port 0 picks a free port."""
    server = ThreadingHTTPServer((host, port), _Handler)
    server.model = model
    server.daemon_threads = True
    return server
