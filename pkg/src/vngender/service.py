"""JSON-over-HTTP prediction service for a loaded model bundle."""

from __future__ import annotations

import json
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .bundle import ModelBundle, bundle_predict
from .errors import EmptyNameError, EmptySequenceError


class _Handler(BaseHTTPRequestHandler):
    server_version = "vngender"
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):  # keep test output quiet
        pass

    def _send(self, code: int, payload: dict, extra_headers: dict | None = None):
        body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
        self.send_response(code)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        for key, value in (extra_headers or {}).items():
            self.send_header(key, value)
        self.end_headers()
        self.wfile.write(body)

    def _route(self) -> str:
        return self.path.split("?", 1)[0]

    def do_GET(self):
        route = self._route()
        if route == "/health":
            self._send(200, {"status": "ok", "model_id": self.server.bundle.model_id})
        elif route == "/predict":
            self._send(405, {"error": "method_not_allowed"}, {"Allow": "POST"})
        else:
            self._send(404, {"error": "not_found"})

    def do_POST(self):
        route = self._route()
        if route == "/health":
            self._send(405, {"error": "method_not_allowed"}, {"Allow": "GET"})
            return
        if route != "/predict":
            self._send(404, {"error": "not_found"})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
        except ValueError:
            length = 0
        body = self.rfile.read(length) if length > 0 else b""
        try:
            payload = json.loads(body.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            self._send(400, {"error": "malformed_json"})
            return
        name = payload.get("name") if isinstance(payload, dict) else None
        if not isinstance(name, str):
            self._send(400, {"error": "invalid_name"})
            return
        try:
            response = bundle_predict(self.server.bundle, name)
        except EmptyNameError:
            self._send(400, {"error": "empty_name"})
            return
        except EmptySequenceError:
            self._send(400, {"error": "empty_components"})
            return
        self._send(200, response)


class PredictionServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, bundle: ModelBundle, host: str, port: int):
        super().__init__((host, port), _Handler)
        self.bundle = bundle


def make_server(bundle: ModelBundle, host: str = "127.0.0.1", port: int = 0) -> PredictionServer:
    """Bind a threaded server; port 0 picks a free ephemeral port."""
    return PredictionServer(bundle, host, port)


def serve(bundle: ModelBundle, bind: str = "127.0.0.1:8000") -> None:
    """Run the service until interrupted."""
    host, _, port_text = bind.rpartition(":")
    server = make_server(bundle, host or "127.0.0.1", int(port_text))
    try:
        server.serve_forever()
    finally:
        server.server_close()
