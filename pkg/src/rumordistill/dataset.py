"""Instruction-record assembly, ablations, splits, statistics, and length
tables.

Record files are JSON-Lines with a stable field order (post_id,
instruction_text, image, target_text, split) so diffs stay reviewable; images
are stored by reference, never inlined.
"""

from __future__ import annotations

import random
from collections import Counter, defaultdict
from dataclasses import replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import EmptyInput, IdMismatch
from .labels import PARSE_FAILURE, extract_label, terminal_sentence
from .models import (ALL_LABELS, InstructionRecord, ProcessedInstance,
                     RationaleRecord, StandardLabel)
from .prompts import render_inference_prompt
from .util import read_jsonl, write_jsonl

ABLATION_FULL = "full"
ABLATION_NO_RATIONALE = "no_rationale"
ABLATION_NO_EVIDENCE_NO_RATIONALE = "no_evidence_no_rationale"

ABLATIONS = (ABLATION_FULL, ABLATION_NO_RATIONALE, ABLATION_NO_EVIDENCE_NO_RATIONALE)


def assemble_record(instance: ProcessedInstance, rationale: RationaleRecord,
                    include_image: bool = False,
                    image: str | None = None) -> InstructionRecord:
    """Pair one instance's inference prompt with its rationale as the target.

    ``image`` is the post's original image reference; it is attached only when
    include_image is set (multimodal students).
    """
    if instance.post_id != rationale.post_id:
        raise IdMismatch(f"instance {instance.post_id} vs rationale {rationale.post_id}")
    prompt = render_inference_prompt(instance)
    if "## Label" in prompt.text or "## Fine-grained labels" in prompt.text:
        raise AssertionError("inference prompt leaked a label block")
    if include_image and image is None:
        raise ValueError("include_image set but no image reference supplied")
    return InstructionRecord(
        post_id=instance.post_id,
        instruction_text=prompt.text,
        image=image if include_image else None,
        target_text=rationale.output_text,
        split="train",
    )


def _strip_evidence(instance: ProcessedInstance) -> ProcessedInstance:
    return replace(instance, textual_evidence=(), visual_evidence=())


def apply_ablation(records: Iterable[InstructionRecord], kind: str,
                   instances: Mapping[str, ProcessedInstance] | None = None
                   ) -> Iterable[InstructionRecord]:
    """Rewrite a record stream for one training regime.

    no_rationale collapses targets to the terminal-label sentence only;
    no_evidence_no_rationale additionally re-renders instructions from the
    instance with all evidence removed (requires the instances mapping).
    """
    if kind not in ABLATIONS:
        raise ValueError(f"unknown ablation: {kind!r}")
    if kind == ABLATION_NO_EVIDENCE_NO_RATIONALE and instances is None:
        raise ValueError("no_evidence_no_rationale needs the instances mapping")
    for record in records:
        if kind == ABLATION_FULL:
            yield record
            continue
        label = extract_label(record.target_text)
        if label is PARSE_FAILURE:
            raise ValueError(f"record {record.post_id} has no extractable target label")
        target = terminal_sentence(label)
        if kind == ABLATION_NO_RATIONALE:
            yield replace(record, target_text=target)
        else:
            instance = instances[record.post_id]
            prompt = render_inference_prompt(_strip_evidence(instance))
            yield replace(record, instruction_text=prompt.text, target_text=target)


def record_gold(record: InstructionRecord) -> StandardLabel | None:
    """Gold label recovered from the target's terminal sentence."""
    label = extract_label(record.target_text)
    return None if label is PARSE_FAILURE else label


def split_dataset(records: Sequence[InstructionRecord], test_fraction: float,
                  seed: int,
                  assignments: Mapping[str, str] | None = None
                  ) -> tuple[list[InstructionRecord], list[InstructionRecord]]:
    """Deterministic stratified split into (train, test).

    When an explicit assignments mapping (post_id -> "train"/"test") is given
    it is honored verbatim and the fraction/seed are ignored.
    """
    if not records:
        raise EmptyInput("cannot split an empty record set")
    if assignments is not None:
        train = [replace(r, split="train") for r in records
                 if assignments.get(r.post_id, "train") == "train"]
        test = [replace(r, split="test") for r in records
                if assignments.get(r.post_id) == "test"]
        return train, test
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must be in (0, 1)")

    by_class: dict[StandardLabel | None, list[int]] = defaultdict(list)
    for idx, record in enumerate(records):
        by_class[record_gold(record)].append(idx)

    rng = random.Random(seed)
    test_idx: set[int] = set()
    for label in sorted(by_class, key=lambda l: -1 if l is None else int(l)):
        indices = list(by_class[label])
        rng.shuffle(indices)
        take = int(test_fraction * len(indices) + 0.5)
        test_idx.update(indices[:take])

    train = [replace(r, split="train") for i, r in enumerate(records) if i not in test_idx]
    test = [replace(r, split="test") for i, r in enumerate(records) if i in test_idx]
    return train, test


_CLASS_KEYS = {
    StandardLabel.NON_RUMOR: "non_rumor",
    StandardLabel.RUMOR: "rumor",
    StandardLabel.UNVERIFIED: "unverified",
}


def dataset_stats(records: Iterable[InstructionRecord]) -> dict:
    """Per-split, per-class counts plus totals."""
    counts: dict[str, Counter] = {"train": Counter(), "test": Counter()}
    for record in records:
        split = record.split if record.split in counts else "train"
        label = record_gold(record)
        key = _CLASS_KEYS.get(label, "unlabeled")
        counts[split][key] += 1

    def row(counter: Counter) -> dict:
        out = {key: counter.get(key, 0) for key in _CLASS_KEYS.values()}
        if counter.get("unlabeled"):
            out["unlabeled"] = counter["unlabeled"]
        out["total"] = sum(counter.values())
        return out

    stats = {"train": row(counts["train"]), "test": row(counts["test"])}
    total = Counter(counts["train"]) + Counter(counts["test"])
    stats["total"] = row(total)
    return stats


def format_stats_table(stats: dict) -> str:
    """Aligned text table in the Set / Non_rumor / Rumor / Unverified / Total shape."""
    headers = ["Set", "Non_rumor", "Rumor", "Unverified", "Total"]
    rows = []
    for name, key in (("Train", "train"), ("Test", "test"), ("Total", "total")):
        row = stats[key]
        rows.append([name, f"{row['non_rumor']:,}", f"{row['rumor']:,}",
                     f"{row['unverified']:,}", f"{row['total']:,}"])
    widths = [max(len(headers[i]), *(len(r[i]) for r in rows)) for i in range(len(headers))]
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(headers))]
    for row in rows:
        lines.append("  ".join(cell.rjust(widths[i]) if i else cell.ljust(widths[i])
                               for i, cell in enumerate(row)))
    return "\n".join(lines)


UNIT_CHARS = "chars"
UNIT_WHITESPACE_TOKENS = "whitespace_tokens"


def _rendered_length(record: InstructionRecord, unit: str) -> int:
    text = record.instruction_text + "\n" + record.target_text
    if unit == UNIT_CHARS:
        return len(text)
    if unit == UNIT_WHITESPACE_TOKENS:
        return len(text.split())
    raise ValueError(f"unknown unit: {unit!r}")


def length_histogram(records: Sequence[InstructionRecord],
                     instances: Mapping[str, ProcessedInstance],
                     unit: str = UNIT_WHITESPACE_TOKENS,
                     bucket_width: int = 50) -> list[dict]:
    """Length buckets per (textual, visual) evidence-count group.

    Returns plot-ready rows {m, n, bucket_start, bucket_end, count}; bucket
    counts within one group always sum to the group's record count.
    """
    if bucket_width <= 0:
        raise ValueError("bucket_width must be > 0")
    groups: dict[tuple[int, int], Counter] = defaultdict(Counter)
    for record in records:
        instance = instances[record.post_id]
        group = (len(instance.textual_evidence), len(instance.visual_evidence))
        bucket = (_rendered_length(record, unit) // bucket_width) * bucket_width
        groups[group][bucket] += 1
    rows: list[dict] = []
    for (m, n) in sorted(groups):
        for bucket in sorted(groups[(m, n)]):
            rows.append({"m": m, "n": n, "bucket_start": bucket,
                         "bucket_end": bucket + bucket_width,
                         "count": groups[(m, n)][bucket]})
    return rows


def write_histogram_table(path: Path | str, rows: Sequence[dict]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("m\tn\tbucket_start\tbucket_end\tcount\n")
        for row in rows:
            handle.write(f"{row['m']}\t{row['n']}\t{row['bucket_start']}\t"
                         f"{row['bucket_end']}\t{row['count']}\n")


def write_records(path: Path | str, records: Iterable[InstructionRecord]) -> int:
    return write_jsonl(path, (r.to_dict() for r in records))


def read_records(path: Path | str) -> list[InstructionRecord]:
    return [InstructionRecord.from_dict(row) for row in read_jsonl(path)]
