"""Teacher orchestration: send labeling prompts to a chat-completion endpoint,
enforce the terminal-label convention, and persist rationale records.

Every answered record is appended to disk immediately, so budget-capped or
crashed runs lose nothing and resume for free.
"""

from __future__ import annotations

import json
import logging
import os
import threading
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import requests

from .cache import FileCache
from .errors import (BudgetExhausted, ConfigError, EmptyCompletion,
                     EndpointFailure, LabelConflict)
from .labels import (LabelTable, default_table, extract_fine_grained,
                     terminal_sentence, trailing_label)
from .models import ProcessedInstance, RationaleRecord, StandardLabel
from .prompts import render_labeling_prompt
from .retrieval import RetryPolicy
from .util import TokenBucket, append_jsonl, read_jsonl, retry_call

log = logging.getLogger(__name__)

BACKEND_HTTP = "http"
BACKEND_MOCK = "mock"

DEFAULT_MOCK_TEXT = ("The available evidence is consistent with the assigned "
                     "label for this post.")


@dataclass
class TeacherConfig:
    backend: str = BACKEND_MOCK
    endpoint: str | None = None
    model_id: str = "mock-teacher"
    api_key_env: str = "TEACHER_API_KEY"
    temperature: float = 0.0
    max_output_tokens: int = 512
    retry: RetryPolicy = field(default_factory=RetryPolicy)
    cost_budget: int | None = None
    mock_text: str = DEFAULT_MOCK_TEXT
    cache: FileCache | None = None
    rate_limiter: TokenBucket | None = None
    timeout: float = 60.0

    def validate(self) -> None:
        if self.backend not in (BACKEND_HTTP, BACKEND_MOCK):
            raise ConfigError(f"unknown teacher backend: {self.backend!r}")
        if self.backend == BACKEND_HTTP and not self.endpoint:
            raise ConfigError("http teacher requires an endpoint")
        if self.temperature < 0:
            raise ConfigError("temperature must be >= 0")
        if self.max_output_tokens < 64:
            raise ConfigError("max_output_tokens must be >= 64")
        self.retry.validate()


class _Retryable(Exception):
    pass


class TeacherSession:
    """One teacher endpoint plus its request accounting and response cache."""

    def __init__(self, cfg: TeacherConfig) -> None:
        cfg.validate()
        self.cfg = cfg
        self.counters: Counter = Counter()
        self._lock = threading.Lock()

    @property
    def requests_spent(self) -> int:
        return self.counters["requests"]

    def _charge(self) -> None:
        with self._lock:
            if (self.cfg.cost_budget is not None
                    and self.counters["requests"] >= self.cfg.cost_budget):
                raise BudgetExhausted(
                    f"request budget of {self.cfg.cost_budget} is spent")
            self.counters["requests"] += 1

    def complete(self, prompt_text: str, fingerprint: str) -> str:
        """Raw completion for one prompt; cached by fingerprint + model."""
        cache_key = f"{fingerprint}-{self.cfg.model_id}"
        if self.cfg.cache is not None:
            cached = self.cfg.cache.get_text("teacher", cache_key)
            if cached is not None:
                self.counters["cache_hits"] += 1
                return cached
        self._charge()
        if self.cfg.backend == BACKEND_MOCK:
            completion = self.cfg.mock_text
        else:
            completion = self._http_complete(prompt_text)
        if self.cfg.cache is not None:
            self.cfg.cache.put_text("teacher", cache_key, completion,
                                    meta={"model_id": self.cfg.model_id})
        return completion

    def _http_complete(self, prompt_text: str) -> str:
        """Chat-completion wire contract: one user message in, first choice out."""
        cfg = self.cfg

        def attempt() -> str:
            if cfg.rate_limiter is not None:
                cfg.rate_limiter.acquire()
            headers = {"Content-Type": "application/json"}
            api_key = os.environ.get(cfg.api_key_env, "")
            if api_key:
                headers["Authorization"] = f"Bearer {api_key}"
            body = {
                "model": cfg.model_id,
                "messages": [{"role": "user", "content": prompt_text}],
                "temperature": cfg.temperature,
                "max_tokens": cfg.max_output_tokens,
            }
            try:
                response = requests.post(cfg.endpoint, json=body, headers=headers,
                                         timeout=cfg.timeout)
            except requests.RequestException as exc:
                raise _Retryable(str(exc)) from exc
            if response.status_code == 429 or response.status_code >= 500:
                raise _Retryable(f"{cfg.endpoint} answered {response.status_code}")
            if not 200 <= response.status_code < 300:
                raise EndpointFailure(f"{cfg.endpoint} answered {response.status_code}")
            try:
                return response.json()["choices"][0]["message"]["content"]
            except (KeyError, IndexError, ValueError, TypeError) as exc:
                raise EndpointFailure(f"malformed completion response: {exc}") from exc

        try:
            return retry_call(attempt, max_attempts=cfg.retry.max_attempts,
                              base_backoff=cfg.retry.base_backoff,
                              retry_on=(_Retryable,))
        except _Retryable as exc:
            raise EndpointFailure(str(exc)) from exc


def append_label_suffix(raw_output: str, gold: StandardLabel) -> str:
    """Guarantee the output ends with the terminal sentence for the gold label.

    Already-terminated output is returned unchanged; a terminal sentence for a
    different label raises LabelConflict (the record must be quarantined, not
    silently rewritten).
    """
    existing = trailing_label(raw_output)
    if existing is not None:
        if existing is gold:
            return raw_output
        raise LabelConflict(
            f"output ends with {existing.surface!r} but gold is {gold.surface!r}")
    return raw_output + " " + terminal_sentence(gold)


def elicit_rationale(instance: ProcessedInstance, gold: StandardLabel,
                     session: TeacherSession,
                     table: LabelTable | None = None) -> RationaleRecord:
    """Render the labeling prompt, query the teacher, and build the record."""
    table = table or default_table()
    prompt = render_labeling_prompt(instance, gold, table)
    completion = session.complete(prompt.text, prompt.fingerprint)
    if not completion.strip():
        raise EmptyCompletion(f"teacher returned a blank completion for {instance.post_id}")
    output_text = append_label_suffix(completion, gold)
    return RationaleRecord(
        post_id=instance.post_id,
        output_text=output_text,
        fine_grained=tuple(extract_fine_grained(output_text, table)),
        terminal_label=gold,
        prompt_fingerprint=prompt.fingerprint,
        teacher_id=session.cfg.model_id,
    )


@dataclass
class BatchReport:
    succeeded: int = 0
    failed: int = 0
    quarantined: int = 0
    skipped: int = 0
    requests_spent: int = 0
    budget_exhausted: bool = False
    errors: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "succeeded": self.succeeded,
            "failed": self.failed,
            "quarantined": self.quarantined,
            "skipped": self.skipped,
            "requests_spent": self.requests_spent,
            "budget_exhausted": self.budget_exhausted,
            "errors": self.errors,
        }


def _persisted_ids(path: Path) -> set[str]:
    if not path.is_file():
        return set()
    return {row["post_id"] for row in read_jsonl(path)}


def run_elicitation_batch(items: Sequence[tuple[ProcessedInstance, StandardLabel]],
                          cfg: TeacherConfig, out_path: Path | str,
                          quarantine_path: Path | str | None = None,
                          resume: bool = True,
                          table: LabelTable | None = None) -> BatchReport:
    """Elicit rationales for every (instance, gold) pair, appending each record
    to disk as it lands. Resume skips post_ids already persisted. Per-item
    errors are counted, never raised; only a spent budget stops the batch."""
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    if quarantine_path is None:
        quarantine_path = out_path.with_name("quarantine.jsonl")
    quarantine_path = Path(quarantine_path)

    session = TeacherSession(cfg)
    report = BatchReport()
    done = _persisted_ids(out_path) | _persisted_ids(quarantine_path) if resume else set()

    for instance, gold in items:
        if instance.post_id in done:
            report.skipped += 1
            continue
        try:
            record = elicit_rationale(instance, gold, session, table)
        except BudgetExhausted:
            report.budget_exhausted = True
            break
        except LabelConflict as exc:
            report.quarantined += 1
            append_jsonl(quarantine_path, {"post_id": instance.post_id,
                                           "reason": str(exc)})
            continue
        except Exception as exc:
            report.failed += 1
            report.errors.append(f"{instance.post_id}: {exc}")
            log.warning("elicitation failed for %s: %s", instance.post_id, exc)
            continue
        append_jsonl(out_path, record.to_dict())
        report.succeeded += 1

    report.requests_spent = session.requests_spent
    return report


def load_rationales(path: Path | str) -> list[RationaleRecord]:
    """Read a rationales JSONL file back into records."""
    from .labels import canonicalize

    table = default_table()
    out: list[RationaleRecord] = []
    for row in read_jsonl(path):
        fine = [entry for text in row.get("fine_grained", ())
                if (entry := table.lookup_entry(canonicalize(text))) is not None]
        out.append(RationaleRecord(
            post_id=row["post_id"],
            output_text=row["output_text"],
            fine_grained=tuple(fine),
            terminal_label=StandardLabel.coerce(row["terminal_label"]),
            prompt_fingerprint=row["prompt_fingerprint"],
            teacher_id=row["teacher_id"],
        ))
    return out


def write_report(path: Path | str, report: BatchReport) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(report.to_dict(), handle, indent=2)
        handle.write("\n")
