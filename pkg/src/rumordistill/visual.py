"""Image-to-text digesting: OCR plus captioning over pluggable backends.

Backends run out of process (external command or HTTP service) or come from a
mock fixture table, so the pipeline core never links a vision model. Captions
are mandatory; OCR is best-effort and degrades to the empty string.
"""

from __future__ import annotations

import io
import logging
import subprocess
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import requests

from .cache import FileCache
from .errors import (BackendUnavailable, ConfigError, EmptyCaption, Timeout,
                     UndecodableImage)
from .models import VisualDigest
from .util import collapse_whitespace, sha256_hex

log = logging.getLogger(__name__)

BACKEND_EXTERNAL_COMMAND = "external_command"
BACKEND_HTTP_SERVICE = "http_service"
BACKEND_MOCK = "mock"

_KINDS = (BACKEND_EXTERNAL_COMMAND, BACKEND_HTTP_SERVICE, BACKEND_MOCK)


@dataclass
class BackendSettings:
    """How to reach one OCR or caption engine."""

    kind: str
    command: tuple[str, ...] | None = None   # argv prefix; image path appended
    endpoint: str | None = None              # POST target for http_service
    fixture_path: str | Path | None = None   # two-column TSV for mock
    api_key_env: str = "VISION_API_KEY"      # optional bearer credential

    def validate(self) -> None:
        if self.kind not in _KINDS:
            raise ConfigError(f"unknown backend kind: {self.kind!r}")
        if self.kind == BACKEND_MOCK and not self.fixture_path:
            raise ConfigError("mock backends require a fixture table")
        if self.kind == BACKEND_EXTERNAL_COMMAND and not self.command:
            raise ConfigError("external_command backends require a command")
        if self.kind == BACKEND_HTTP_SERVICE and not self.endpoint:
            raise ConfigError("http_service backends require an endpoint")

    def identity(self) -> str:
        """Stable id used to namespace cached responses."""
        detail = self.fixture_path or self.endpoint or (self.command and " ".join(self.command)) or ""
        return f"{self.kind}-{sha256_hex(str(detail))[:12]}"


@dataclass
class VisualBackendConfig:
    ocr: BackendSettings
    caption: BackendSettings
    timeout: float = 30.0
    cache: FileCache | None = None
    counters: Counter = field(default_factory=Counter)

    def validate(self) -> None:
        if self.timeout <= 0:
            raise ConfigError("timeout must be > 0")
        self.ocr.validate()
        self.caption.validate()


def _image_bytes(image: str | Path | bytes) -> bytes:
    if isinstance(image, bytes):
        return image
    path = Path(image)
    try:
        return path.read_bytes()
    except OSError as exc:
        raise UndecodableImage(f"cannot read image {path}: {exc}") from exc


def ensure_decodable(image: str | Path | bytes) -> None:
    """Raise UndecodableImage unless the bytes parse as an image."""
    from PIL import Image, UnidentifiedImageError

    data = _image_bytes(image)
    try:
        with Image.open(io.BytesIO(data)) as img:
            img.verify()
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise UndecodableImage(str(exc)) from exc


def _load_fixture_table(path: str | Path) -> dict[str, str]:
    table: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.rstrip("\n")
            if not line:
                continue
            key, _, text = line.partition("\t")
            table[key] = text
    return table


def _run_command_backend(settings: BackendSettings, image: str | Path | bytes,
                         timeout: float) -> str:
    import tempfile

    if isinstance(image, bytes):
        with tempfile.NamedTemporaryFile(suffix=".img", delete=False) as tmp:
            tmp.write(image)
            image_path = tmp.name
    else:
        image_path = str(image)
    argv = list(settings.command or ()) + [image_path]
    try:
        proc = subprocess.run(argv, capture_output=True, timeout=timeout)
    except subprocess.TimeoutExpired as exc:
        raise Timeout(f"backend command timed out after {timeout}s") from exc
    except OSError as exc:
        raise BackendUnavailable(f"cannot run {argv[0]}: {exc}") from exc
    if proc.returncode != 0:
        raise BackendUnavailable(
            f"{argv[0]} exited {proc.returncode}: {proc.stderr.decode('utf-8', 'replace')[:200]}")
    return proc.stdout.decode("utf-8", "replace")


def _run_http_backend(settings: BackendSettings, image: str | Path | bytes,
                      timeout: float) -> str:
    import os

    headers = {}
    api_key = os.environ.get(settings.api_key_env, "")
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    try:
        response = requests.post(settings.endpoint, data=_image_bytes(image),
                                 headers=headers, timeout=timeout)
    except requests.Timeout as exc:
        raise Timeout(f"backend at {settings.endpoint} timed out") from exc
    except requests.RequestException as exc:
        raise BackendUnavailable(str(exc)) from exc
    if not 200 <= response.status_code < 300:
        raise BackendUnavailable(f"{settings.endpoint} answered {response.status_code}")
    return response.text


def _run_mock_backend(settings: BackendSettings, image: str | Path | bytes) -> str:
    table = _load_fixture_table(settings.fixture_path)  # small files; reload is cheap
    key = sha256_hex(_image_bytes(image))
    if key not in table:
        raise BackendUnavailable(f"mock fixture has no entry for image {key[:12]}")
    return table[key]


def _invoke(task: str, settings: BackendSettings, image: str | Path | bytes,
            cfg: VisualBackendConfig) -> str:
    """Dispatch one backend call with caching; returns normalized text."""
    engine = f"{task}-{settings.identity()}"
    key = sha256_hex(_image_bytes(image))
    if cfg.cache is not None:
        cached = cfg.cache.get_text(engine, key)
        if cached is not None:
            cfg.counters[f"{task}_cache_hits"] += 1
            return cached
    if settings.kind != BACKEND_MOCK:
        ensure_decodable(image)
    cfg.counters[f"{task}_backend_calls"] += 1
    if settings.kind == BACKEND_MOCK:
        raw = _run_mock_backend(settings, image)
    elif settings.kind == BACKEND_EXTERNAL_COMMAND:
        raw = _run_command_backend(settings, image, cfg.timeout)
    else:
        raw = _run_http_backend(settings, image, cfg.timeout)
    text = collapse_whitespace(raw)
    if cfg.cache is not None:
        cfg.cache.put_text(engine, key, text, meta={"task": task})
    return text


def run_ocr(image: str | Path | bytes, cfg: VisualBackendConfig) -> str:
    """Recognized text, whitespace-normalized; empty when nothing detected."""
    return _invoke("ocr", cfg.ocr, image, cfg)


def generate_caption(image: str | Path | bytes, cfg: VisualBackendConfig) -> str:
    """One nonempty descriptive sentence for the image."""
    text = _invoke("caption", cfg.caption, image, cfg)
    if not text:
        raise EmptyCaption("caption backend returned a blank string")
    return text


def process_visual(image: str | Path | bytes, cfg: VisualBackendConfig) -> VisualDigest:
    """OCR + caption one image. Caption errors propagate; OCR degrades."""
    caption = generate_caption(image, cfg)
    try:
        ocr = run_ocr(image, cfg)
    except (BackendUnavailable, Timeout) as exc:
        log.warning("OCR failed, keeping empty ocr_text: %s", exc)
        cfg.counters["ocr_degraded"] += 1
        ocr = ""
    return VisualDigest(ocr_text=ocr, caption_text=caption)
