"""Wire-contract tests against a real local HTTP server (no monkeypatching)."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from rumordistill.clients import ChatCompletionClient, StudentServerClient
from rumordistill.errors import EndpointFailure
from rumordistill.labels import terminal_sentence
from rumordistill.models import StandardLabel
from rumordistill.retrieval import EngineSettings, RetrievalConfig, RetryPolicy, reverse_image_search
from rumordistill.teacher import TeacherConfig, TeacherSession
from rumordistill.visual import BackendSettings, VisualBackendConfig, generate_caption


class _Script:
    """Request log plus a queue of scripted responses per path."""

    def __init__(self):
        self.requests: list[dict] = []
        self.responses: dict[str, list[tuple[int, bytes, str]]] = {}

    def enqueue(self, path: str, status: int, body: bytes | str,
                content_type="application/json"):
        if isinstance(body, str):
            body = body.encode("utf-8")
        self.responses.setdefault(path, []).append((status, body, content_type))

    def pop(self, path: str):
        queue = self.responses.get(path) or []
        if len(queue) > 1:
            return queue.pop(0)
        return queue[0] if queue else (404, b"{}", "application/json")


@pytest.fixture
def server():
    script = _Script()

    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            length = int(self.headers.get("Content-Length", 0))
            payload = self.rfile.read(length)
            entry = {"path": self.path, "raw": payload,
                     "content_type": self.headers.get("Content-Type", "")}
            if entry["content_type"].startswith("application/json"):
                entry["json"] = json.loads(payload)
            script.requests.append(entry)
            status, body, content_type = script.pop(self.path)
            self.send_response(status)
            self.send_header("Content-Type", content_type)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def log_message(self, *args):
            pass

    httpd = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    try:
        yield f"http://127.0.0.1:{httpd.server_address[1]}", script
    finally:
        httpd.shutdown()


def test_visual_http_backend_round_trip(server, png_file, tmp_path):
    base, script = server
    script.enqueue("/caption", 200, "a crowd\n near a bridge", content_type="text/plain")
    fixture = tmp_path / "o.tsv"
    image = png_file()
    fixture.write_text("", encoding="utf-8")
    cfg = VisualBackendConfig(
        ocr=BackendSettings(kind="mock", fixture_path=fixture),
        caption=BackendSettings(kind="http_service", endpoint=f"{base}/caption"),
    )
    assert generate_caption(image, cfg) == "a crowd near a bridge"
    assert script.requests[0]["raw"] == image.read_bytes()  # raw image bytes posted


def test_search_http_adapter_round_trip(server, png_file):
    base, script = server
    script.enqueue("/search", 200, json.dumps(
        {"hits": [{"title": "t", "description": "d", "url": "u"}]}))
    engine = EngineSettings(kind="http", endpoint=f"{base}/search")
    cfg = RetrievalConfig(reverse_image=engine, text_search=engine,
                          retry=RetryPolicy(max_attempts=2, base_backoff=0.0))
    out = reverse_image_search(png_file(), cfg)
    assert [e.title for e in out] == ["t"]
    sent = script.requests[0]["json"]
    assert sent["direction"] == "reverse_image"
    assert "image_b64" in sent


def test_teacher_chat_completion_contract(server):
    base, script = server
    completion = "Looks dubious. " + terminal_sentence(StandardLabel.RUMOR)
    script.enqueue("/v1/chat/completions", 200, json.dumps(
        {"choices": [{"message": {"content": completion}}]}))
    cfg = TeacherConfig(backend="http", endpoint=f"{base}/v1/chat/completions",
                        model_id="teacher-1", retry=RetryPolicy(2, 0.0))
    session = TeacherSession(cfg)
    out = session.complete("PROMPT TEXT", "fp")
    assert out == completion
    sent = script.requests[0]["json"]
    assert sent["model"] == "teacher-1"
    assert sent["messages"] == [{"role": "user", "content": "PROMPT TEXT"}]
    assert sent["temperature"] == 0.0


def test_chat_client_retries_then_succeeds(server):
    base, script = server
    script.enqueue("/v1/chat/completions", 500, "{}")
    script.enqueue("/v1/chat/completions", 200, json.dumps(
        {"choices": [{"message": {"content": "ok"}}]}))
    client = ChatCompletionClient(f"{base}/v1/chat/completions", model_id="m",
                                  retry=RetryPolicy(max_attempts=3, base_backoff=0.0))
    assert client.complete("hi") == "ok"
    assert len(script.requests) == 2


def test_chat_client_hard_failure(server):
    base, script = server
    script.enqueue("/v1/chat/completions", 400, "{}")
    client = ChatCompletionClient(f"{base}/v1/chat/completions", model_id="m",
                                  retry=RetryPolicy(max_attempts=2, base_backoff=0.0))
    with pytest.raises(EndpointFailure):
        client.complete("hi")


def test_teacher_retries_transient_failures(server):
    base, script = server
    script.enqueue("/v1/chat/completions", 500, "{}")
    script.enqueue("/v1/chat/completions", 200, json.dumps(
        {"choices": [{"message": {"content": "recovered"}}]}))
    cfg = TeacherConfig(backend="http", endpoint=f"{base}/v1/chat/completions",
                        retry=RetryPolicy(max_attempts=3, base_backoff=0.0))
    assert TeacherSession(cfg).complete("p", "fp") == "recovered"
    assert len(script.requests) == 2


def test_teacher_endpoint_failure_after_retries(server):
    base, script = server
    script.enqueue("/v1/chat/completions", 500, "{}")
    cfg = TeacherConfig(backend="http", endpoint=f"{base}/v1/chat/completions",
                        retry=RetryPolicy(max_attempts=2, base_backoff=0.0))
    with pytest.raises(EndpointFailure):
        TeacherSession(cfg).complete("p", "fp")
    assert len(script.requests) == 2


def test_student_server_client_contract(server):
    base, script = server
    script.enqueue("/v1/complete", 200, json.dumps({"completion": "done"}))
    client = StudentServerClient(base)
    assert client.complete("prompt", image="img.png") == "done"
    sent = script.requests[0]["json"]
    assert sent == {"prompt": "prompt", "image": "img.png"}
