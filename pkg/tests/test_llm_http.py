"""Live HTTP model backend wiring (mock server, documented body schema)."""
import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from orchestra_kernel.errors import SourceUnavailable
from orchestra_kernel.llm import HTTPModelBackend


class _Handler(BaseHTTPRequestHandler):
    def do_POST(self):
        length = int(self.headers["Content-Length"])
        body = json.loads(self.rfile.read(length))
        # documented request: {"prompt": str, "config": {}}
        assert "prompt" in body and "config" in body
        reply = {"text": f"echo: {body['prompt']}", "cost": 1.5,
                 "latency_ms": 42.0}
        payload = json.dumps(reply).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture
def http_backend():
    server = HTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    url = f"http://127.0.0.1:{server.server_address[1]}/complete"
    yield url
    server.shutdown()


def test_http_backend_round_trip(http_backend):
    backend = HTTPModelBackend(http_backend)
    completion = backend.complete("cities in the SF bay area",
                                  {"temperature": 0})
    assert completion.text == "echo: cities in the SF bay area"
    assert completion.cost == 1.5
    assert completion.latency_ms == 42.0


def test_http_backend_down_is_unavailable():
    backend = HTTPModelBackend("http://127.0.0.1:9/nothing", timeout=0.5)
    with pytest.raises(SourceUnavailable):
        backend.complete("hello")


def test_kernel_backend_override_routes_model_calls(kernel, http_backend,
                                                    seed_dir):
    k = kernel(config={"model_backend": {"kind": "http",
                                         "url": http_backend}},
               seeded=False)
    k.seed_tree(seed_dir)
    plan = k.data_planner.plan_transform("unmatched by any rule", "TEXT",
                                         target_name="Criteria")
    value, _sem = k.data_planner.execute(plan,
                                         input_value="unmatched by any rule")
    assert value.startswith("echo: Extract the Criteria from:")
