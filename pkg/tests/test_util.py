from __future__ import annotations

import threading

import pytest

from rumordistill.util import (TokenBucket, atomic_write_text, collapse_whitespace,
                               retry_call, sha256_hex)


def test_collapse_whitespace():
    assert collapse_whitespace("a\n\n b ") == "a b"
    assert collapse_whitespace("\t\r\n") == ""
    assert collapse_whitespace("中 文　字") == "中 文 字"


def test_sha256_hex_str_and_bytes_agree():
    assert sha256_hex("abc") == sha256_hex(b"abc")
    assert len(sha256_hex("abc")) == 64


def test_atomic_write_creates_parents(tmp_path):
    target = tmp_path / "deep" / "dir" / "file.txt"
    atomic_write_text(target, "payload")
    assert target.read_text(encoding="utf-8") == "payload"
    assert list(target.parent.iterdir()) == [target]  # no temp litter


def test_retry_call_backoff_sequence():
    sleeps: list[float] = []
    attempts = {"n": 0}

    def flaky():
        attempts["n"] += 1
        if attempts["n"] < 3:
            raise OSError("flap")
        return "done"

    out = retry_call(flaky, max_attempts=4, base_backoff=0.5,
                     retry_on=(OSError,), sleep=sleeps.append)
    assert out == "done"
    assert sleeps == [0.5, 1.0]  # exponential doubling


def test_retry_call_exhaustion_reraises():
    sleeps: list[float] = []
    with pytest.raises(OSError):
        retry_call(lambda: (_ for _ in ()).throw(OSError("x")),
                   max_attempts=3, base_backoff=0.1,
                   retry_on=(OSError,), sleep=sleeps.append)
    assert len(sleeps) == 2


def test_token_bucket_paces_requests():
    now = {"t": 0.0}
    waits: list[float] = []

    def clock():
        return now["t"]

    def sleep(seconds):
        waits.append(seconds)
        now["t"] += seconds

    bucket = TokenBucket(rate_per_sec=2.0, capacity=1.0, clock=clock, sleep=sleep)
    bucket.acquire()           # token available immediately
    bucket.acquire()           # must wait 0.5s for the refill
    assert waits == [0.5]


def test_token_bucket_thread_safe():
    bucket = TokenBucket(rate_per_sec=10_000.0)
    done = []

    def worker():
        for _ in range(50):
            bucket.acquire()
        done.append(1)

    threads = [threading.Thread(target=worker) for _ in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(done) == 4


def test_token_bucket_rejects_bad_rate():
    with pytest.raises(ValueError):
        TokenBucket(rate_per_sec=0)
