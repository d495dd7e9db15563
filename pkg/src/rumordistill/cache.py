"""Content-addressed response cache shared by the visual, retrieval, and
teacher stages.

Layout: ``root/<engine>/<key>.response`` (raw payload bytes) plus a
``<key>.meta.json`` sidecar. Writes go through a temp file and a rename, and
an in-process lock registry enforces one writer per key.
"""

from __future__ import annotations

import json
import re
import threading
import time
from pathlib import Path

from .util import atomic_write_bytes

_SAFE_RE = re.compile(r"[^A-Za-z0-9._-]+")


def _safe(name: str) -> str:
    return _SAFE_RE.sub("_", name)


class FileCache:
    def __init__(self, root: Path | str) -> None:
        self.root = Path(root)
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    def _lock_for(self, path: Path) -> threading.Lock:
        key = str(path)
        with self._registry_lock:
            lock = self._locks.get(key)
            if lock is None:
                lock = self._locks[key] = threading.Lock()
            return lock

    def _paths(self, engine: str, key: str) -> tuple[Path, Path]:
        base = self.root / _safe(engine)
        return base / f"{_safe(key)}.response", base / f"{_safe(key)}.meta.json"

    def get(self, engine: str, key: str) -> bytes | None:
        payload_path, _ = self._paths(engine, key)
        if not payload_path.is_file():
            return None
        return payload_path.read_bytes()

    def put(self, engine: str, key: str, payload: bytes,
            meta: dict | None = None) -> None:
        payload_path, meta_path = self._paths(engine, key)
        with self._lock_for(payload_path):
            atomic_write_bytes(payload_path, payload)
            sidecar = {"timestamp": time.time(), "query_hash": key}
            if meta:
                sidecar.update(meta)
            atomic_write_bytes(meta_path, json.dumps(sidecar, ensure_ascii=False).encode("utf-8"))

    def get_text(self, engine: str, key: str) -> str | None:
        payload = self.get(engine, key)
        return None if payload is None else payload.decode("utf-8")

    def put_text(self, engine: str, key: str, text: str,
                 meta: dict | None = None) -> None:
        self.put(engine, key, text.encode("utf-8"), meta)
