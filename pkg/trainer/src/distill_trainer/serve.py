"""Serve a trained student behind the local completion contract.

POST /v1/complete  {"prompt": str, "image": str|null} -> {"completion": str}
GET  /health       -> {"status": "ok", "base_model_id": ...}

Greedy decoding; one request at a time per worker. The image field is
accepted for multimodal callers and ignored by the text-only tiny students.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .data import PROMPT_BOUNDARY
from .lora import load_adapter
from .model import build_base_model
from .train import greedy_generate


class StudentServer:
    def __init__(self, base_model_id: str, adapter_dir: Path | str,
                 host: str = "127.0.0.1", port: int = 0,
                 max_new_tokens: int = 2048) -> None:
        adapter_dir = Path(adapter_dir)
        config = json.loads((adapter_dir / "adapter_config.json").read_text(encoding="utf-8"))
        model, tokenizer = build_base_model(base_model_id, seed=config.get("seed", 0))
        load_adapter(model, adapter_dir, expected_base_model_id=base_model_id)
        model.eval()

        self.base_model_id = base_model_id
        self.max_new_tokens = max_new_tokens
        self._model = model
        self._tokenizer = tokenizer
        self._generate_lock = threading.Lock()
        self._httpd = ThreadingHTTPServer((host, port), self._handler_class())
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    def complete(self, prompt: str, max_new_tokens: int | None = None) -> str:
        budget = min(max_new_tokens or self.max_new_tokens, self.max_new_tokens)
        with self._generate_lock:
            return greedy_generate(self._model, self._tokenizer, prompt,
                                   max_new_tokens=budget, boundary=PROMPT_BOUNDARY)

    def _handler_class(self):
        server = self

        class Handler(BaseHTTPRequestHandler):
            def _reply(self, status: int, payload: dict) -> None:
                body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def do_GET(self):
                if self.path == "/health":
                    self._reply(200, {"status": "ok",
                                      "base_model_id": server.base_model_id})
                else:
                    self._reply(404, {"error": "not found"})

            def do_POST(self):
                if self.path != "/v1/complete":
                    self._reply(404, {"error": "not found"})
                    return
                try:
                    length = int(self.headers.get("Content-Length", 0))
                    request = json.loads(self.rfile.read(length))
                    prompt = request["prompt"]
                    max_new = request.get("max_new_tokens")
                except (ValueError, KeyError) as exc:
                    self._reply(400, {"error": f"bad request: {exc}"})
                    return
                completion = server.complete(prompt, max_new)
                self._reply(200, {"completion": completion})

            def log_message(self, *args):
                pass

        return Handler

    def start(self) -> "StudentServer":
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._httpd.shutdown()

    def serve_forever(self) -> None:
        self._httpd.serve_forever()


def serve_student(base_model_id: str, adapter_dir: Path | str,
                  host: str = "127.0.0.1", port: int = 0,
                  max_new_tokens: int = 2048) -> StudentServer:
    """Build, load, and start a student server; returns the running server."""
    return StudentServer(base_model_id, adapter_dir, host=host, port=port,
                         max_new_tokens=max_new_tokens).start()
