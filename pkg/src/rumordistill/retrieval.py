"""Evidence retrieval: reverse-image search for textual evidence, text search
for visual evidence, digesting of visual hits, and bundle selection.

Engines are pluggable adapters behind an HTTP schema or a recorded fixture
file; every response is cached by query hash so warm-cache runs are
byte-identical and fully offline.
"""

from __future__ import annotations

import base64
import json
import logging
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import requests

from .cache import FileCache
from .errors import (BackendUnavailable, ConfigError, EmptyQuery, NetworkFailure,
                     OfflineMiss, QuotaExceeded)
from .models import ProcessedInstance, TextualEvidence, VisualDigest, VisualEvidence
from .util import TokenBucket, collapse_whitespace, retry_call, sha256_hex
from .visual import VisualBackendConfig, process_visual

log = logging.getLogger(__name__)

ENGINE_MOCK = "mock"
ENGINE_HTTP = "http"

DIRECTION_REVERSE_IMAGE = "reverse_image"
DIRECTION_TEXT_SEARCH = "text_search"


@dataclass
class EngineSettings:
    """How to reach one search engine (or its recorded fixture)."""

    kind: str = ENGINE_MOCK
    fixture_path: str | Path | None = None
    endpoint: str | None = None
    api_key_env: str = "SEARCH_API_KEY"
    base_dir: str | Path | None = None  # resolves relative image paths in hits

    def validate(self) -> None:
        if self.kind not in (ENGINE_MOCK, ENGINE_HTTP):
            raise ConfigError(f"unknown engine kind: {self.kind!r}")
        if self.kind == ENGINE_MOCK and not self.fixture_path:
            raise ConfigError("mock engines require a fixture file")
        if self.kind == ENGINE_HTTP and not self.endpoint:
            raise ConfigError("http engines require an endpoint")

    def identity(self) -> str:
        detail = self.fixture_path or self.endpoint or ""
        return f"{self.kind}-{sha256_hex(str(detail))[:12]}"


@dataclass
class RetryPolicy:
    max_attempts: int = 3
    base_backoff: float = 0.5

    def validate(self) -> None:
        if self.max_attempts < 1:
            raise ConfigError("retry.max_attempts must be >= 1")
        if self.base_backoff < 0:
            raise ConfigError("retry.base_backoff must be >= 0")


@dataclass
class RetrievalConfig:
    max_textual: int = 3
    max_visual: int = 3
    reverse_image: EngineSettings | None = None
    text_search: EngineSettings | None = None
    cache: FileCache | None = None
    retry: RetryPolicy = field(default_factory=RetryPolicy)
    offline_mode: bool = False
    max_item_chars: int = 500
    rate_limiter: TokenBucket | None = None
    timeout: float = 30.0
    counters: Counter = field(default_factory=Counter)

    def validate(self) -> None:
        if self.max_textual < 0 or self.max_visual < 0:
            raise ConfigError("evidence caps must be >= 0")
        if self.max_textual + self.max_visual > 20:
            raise ConfigError("max_textual + max_visual must be <= 20")
        if self.max_item_chars <= 0:
            raise ConfigError("max_item_chars must be > 0")
        self.retry.validate()
        for engine in (self.reverse_image, self.text_search):
            if engine is not None:
                engine.validate()


@dataclass(frozen=True)
class RawImageHit:
    """A text-search hit before digesting: an image plus its page title."""

    title: str
    image: str  # local path or http(s) URL
    url: str | None = None
    rank: int = 0


@dataclass(frozen=True)
class EvidenceBundle:
    textual: tuple[TextualEvidence, ...]
    visual: tuple[VisualEvidence, ...]


class _Retryable(Exception):
    pass


def _query_engine(direction: str, key: str, payload: dict, settings: EngineSettings,
                  cfg: RetrievalConfig) -> list[dict]:
    """Return the raw hit dicts for one query, via cache, fixture, or HTTP."""
    engine_id = f"{direction}-{settings.identity()}"
    if cfg.cache is not None:
        cached = cfg.cache.get_text(engine_id, key)
        if cached is not None:
            cfg.counters["cache_hits"] += 1
            return json.loads(cached)
    if settings.kind == ENGINE_MOCK:
        hits = _fixture_hits(direction, key, settings)
        cfg.counters["engine_requests"] += 1
    else:
        if cfg.offline_mode:
            raise OfflineMiss(f"{direction} query {key[:12]} not cached and offline_mode is on")
        hits = _http_search(direction, payload, settings, cfg)
        cfg.counters["engine_requests"] += 1
    if cfg.cache is not None:
        cfg.cache.put_text(engine_id, key, json.dumps(hits, ensure_ascii=False, sort_keys=True),
                           meta={"direction": direction})
    return hits


def _fixture_hits(direction: str, key: str, settings: EngineSettings) -> list[dict]:
    with open(settings.fixture_path, "r", encoding="utf-8") as handle:
        fixture = json.load(handle)
    return fixture.get(direction, {}).get(key, [])


def _http_search(direction: str, payload: dict, settings: EngineSettings,
                 cfg: RetrievalConfig) -> list[dict]:
    """POST {"direction", ...query material} and expect {"hits": [...]}."""
    import os

    def attempt() -> list[dict]:
        if cfg.rate_limiter is not None:
            cfg.rate_limiter.acquire()
        headers = {}
        api_key = os.environ.get(settings.api_key_env, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        try:
            response = requests.post(settings.endpoint,
                                     json={"direction": direction, **payload},
                                     headers=headers, timeout=cfg.timeout)
        except requests.RequestException as exc:
            raise _Retryable(str(exc)) from exc
        if response.status_code == 429:
            raise QuotaExceeded(f"{settings.endpoint} answered 429")
        if response.status_code >= 500:
            raise _Retryable(f"{settings.endpoint} answered {response.status_code}")
        if not 200 <= response.status_code < 300:
            raise NetworkFailure(f"{settings.endpoint} answered {response.status_code}")
        return response.json().get("hits", [])

    try:
        return retry_call(attempt, max_attempts=cfg.retry.max_attempts,
                          base_backoff=cfg.retry.base_backoff, retry_on=(_Retryable,))
    except _Retryable as exc:
        raise NetworkFailure(str(exc)) from exc


def _image_query_bytes(image: str | Path | bytes) -> bytes:
    if isinstance(image, bytes):
        return image
    return Path(image).read_bytes()


def reverse_image_search(image: str | Path | bytes,
                         cfg: RetrievalConfig) -> list[TextualEvidence]:
    """Search by image; return title/description hits in engine rank order."""
    if cfg.reverse_image is None:
        raise ConfigError("no reverse_image engine configured")
    data = _image_query_bytes(image)
    key = sha256_hex(data)
    payload = {"image_b64": base64.b64encode(data).decode("ascii")}
    hits = _query_engine(DIRECTION_REVERSE_IMAGE, key, payload, cfg.reverse_image, cfg)
    return [
        TextualEvidence(title=h.get("title", ""), description=h.get("description", ""),
                        source_url=h.get("url"), rank=i)
        for i, h in enumerate(hits)
    ]


def text_search_images(text: str, cfg: RetrievalConfig) -> list[RawImageHit]:
    """Search images by post text; hits carry the image reference and title."""
    if cfg.text_search is None:
        raise ConfigError("no text_search engine configured")
    query = collapse_whitespace(text)
    if not query:
        raise EmptyQuery("text search needs a nonempty query")
    key = sha256_hex(query)
    hits = _query_engine(DIRECTION_TEXT_SEARCH, key, {"query": query}, cfg.text_search, cfg)
    base = cfg.text_search.base_dir
    out: list[RawImageHit] = []
    for i, h in enumerate(hits):
        image = h.get("image", "")
        if base is not None and image and "://" not in image and not Path(image).is_absolute():
            image = str(Path(base) / image)
        out.append(RawImageHit(title=h.get("title", ""), image=image,
                               url=h.get("url"), rank=i))
    return out


def _fetch_hit_image(hit: RawImageHit, cfg: RetrievalConfig) -> bytes:
    if hit.image.startswith(("http://", "https://")):
        key = sha256_hex(hit.image)
        if cfg.cache is not None:
            cached = cfg.cache.get("evidence-images", key)
            if cached is not None:
                return cached
        if cfg.offline_mode:
            raise OfflineMiss(f"evidence image {hit.image} not cached")
        try:
            response = requests.get(hit.image, timeout=cfg.timeout)
        except requests.RequestException as exc:
            raise BackendUnavailable(str(exc)) from exc
        if not 200 <= response.status_code < 300:
            raise BackendUnavailable(f"{hit.image} answered {response.status_code}")
        if cfg.cache is not None:
            cfg.cache.put("evidence-images", key, response.content, meta={"url": hit.image})
        return response.content
    try:
        return Path(hit.image).read_bytes()
    except OSError as exc:
        raise BackendUnavailable(f"cannot read evidence image {hit.image}: {exc}") from exc


def digest_visual_evidence(hit: RawImageHit, visual_cfg: VisualBackendConfig,
                           cfg: RetrievalConfig | None = None) -> VisualEvidence:
    """OCR + caption one raw hit, keeping its title and rank."""
    data = _fetch_hit_image(hit, cfg) if cfg is not None else Path(hit.image).read_bytes()
    digest = process_visual(data, visual_cfg)
    return VisualEvidence(image_title=hit.title, image_ocr=digest.ocr_text,
                          image_caption=digest.caption_text, source_url=hit.url,
                          rank=hit.rank)


def digest_visual_hits(hits: Sequence[RawImageHit], visual_cfg: VisualBackendConfig,
                       cfg: RetrievalConfig | None = None) -> list[VisualEvidence]:
    """Digest every hit; a failing hit is dropped with a warning, not fatal."""
    out: list[VisualEvidence] = []
    for hit in hits:
        try:
            out.append(digest_visual_evidence(hit, visual_cfg, cfg))
        except Exception as exc:  # evidence is auxiliary; never abort the bundle
            log.warning("dropping evidence hit %r (rank %d): %s", hit.title, hit.rank, exc)
            if cfg is not None:
                cfg.counters["dropped_hits"] += 1
    return out


def _clip(s: str, limit: int) -> str:
    return s if len(s) <= limit else s[:limit]


def _clip_textual(item: TextualEvidence, limit: int) -> TextualEvidence:
    return replace(item, title=_clip(item.title, limit),
                   description=_clip(item.description, limit))


def _clip_visual(item: VisualEvidence, limit: int) -> VisualEvidence:
    return replace(item, image_title=_clip(item.image_title, limit),
                   image_ocr=_clip(item.image_ocr, limit),
                   image_caption=_clip(item.image_caption, limit))


def select_evidence(textual: Sequence[TextualEvidence],
                    visual: Sequence[VisualEvidence],
                    cfg: RetrievalConfig) -> EvidenceBundle:
    """Dedup exact duplicates (keeping the lowest rank), then keep the first
    max_textual / max_visual items. Deterministic and idempotent."""
    limit = cfg.max_item_chars
    clipped_textual = [_clip_textual(t, limit) for t in textual]
    clipped_visual = [_clip_visual(v, limit) for v in visual]

    seen_t: set[tuple[str, str]] = set()
    kept_t: list[TextualEvidence] = []
    for item in clipped_textual:
        key = (item.title, item.description)
        if key not in seen_t:
            seen_t.add(key)
            kept_t.append(item)

    seen_v: set[tuple[str, str, str]] = set()
    kept_v: list[VisualEvidence] = []
    for item in clipped_visual:
        key = (item.image_title, item.image_ocr, item.image_caption)
        if key not in seen_v:
            seen_v.add(key)
            kept_v.append(item)

    return EvidenceBundle(textual=tuple(kept_t[: cfg.max_textual]),
                          visual=tuple(kept_v[: cfg.max_visual]))


def retrieve_for_post(post_id: str, text: str, image: str | Path | bytes,
                      digest: VisualDigest, cfg: RetrievalConfig,
                      visual_cfg: VisualBackendConfig) -> ProcessedInstance:
    """Run both search directions for one post and build its instance."""
    textual = reverse_image_search(image, cfg)
    if collapse_whitespace(text):
        raw_hits = text_search_images(text, cfg)
        visual = digest_visual_hits(raw_hits, visual_cfg, cfg)
    else:
        log.warning("post %s has empty text; skipping text search", post_id)
        visual = []
    bundle = select_evidence(textual, visual, cfg)
    return ProcessedInstance(post_id=post_id, text=text, digest=digest,
                             textual_evidence=bundle.textual,
                             visual_evidence=bundle.visual)
