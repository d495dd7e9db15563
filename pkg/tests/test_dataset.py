from __future__ import annotations

import json
import random
from collections import Counter

import pytest

import rumordistill.dataset as ds
from conftest import full_instance, random_gold, random_instance, zero_evidence_instance
from rumordistill.errors import EmptyInput, IdMismatch
from rumordistill.labels import extract_label, terminal_sentence
from rumordistill.models import (ALL_LABELS, InstructionRecord, RationaleRecord,
                                 StandardLabel)
from rumordistill.util import read_jsonl


def _rationale(post_id: str, gold: StandardLabel, body="Reasoning here.") -> RationaleRecord:
    return RationaleRecord(
        post_id=post_id,
        output_text=body + " " + terminal_sentence(gold),
        fine_grained=(),
        terminal_label=gold,
        prompt_fingerprint="f" * 64,
        teacher_id="mock-teacher",
    )


def test_assemble_record_without_image():
    instance = full_instance()
    record = ds.assemble_record(instance, _rationale(instance.post_id, StandardLabel.RUMOR))
    assert record.image is None
    assert record.post_id == instance.post_id
    assert "## Label" not in record.instruction_text
    assert record.target_text.endswith(terminal_sentence(StandardLabel.RUMOR))


def test_assemble_record_with_image():
    instance = full_instance()
    record = ds.assemble_record(instance, _rationale(instance.post_id, StandardLabel.RUMOR),
                                include_image=True, image="images/a.png")
    assert record.image == "images/a.png"


def test_assemble_record_id_mismatch():
    with pytest.raises(IdMismatch):
        ds.assemble_record(full_instance(), _rationale("other-id", StandardLabel.RUMOR))


def _records(count=30, seed=5) -> tuple[list[InstructionRecord], dict]:
    rng = random.Random(seed)
    records, instances = [], {}
    for _ in range(count):
        instance = random_instance(rng)
        gold = random_gold(rng)
        instances[instance.post_id] = instance
        records.append(ds.assemble_record(instance, _rationale(instance.post_id, gold)))
    return records, instances


def test_apply_ablation_full_is_identity():
    records, _ = _records(10)
    assert list(ds.apply_ablation(records, ds.ABLATION_FULL)) == records


def test_apply_ablation_no_rationale_targets_are_terminal_sentences():
    records, _ = _records(20)
    for before, after in zip(records, ds.apply_ablation(records, ds.ABLATION_NO_RATIONALE)):
        gold = extract_label(before.target_text)
        assert after.target_text == terminal_sentence(gold)
        assert after.instruction_text == before.instruction_text
        assert extract_label(after.target_text) is gold


def test_apply_ablation_strips_evidence_and_rationale():
    records, instances = _records(20)
    stripped = list(ds.apply_ablation(records, ds.ABLATION_NO_EVIDENCE_NO_RATIONALE,
                                      instances))
    for record in stripped:
        assert "Textual_evidence: \n" in record.instruction_text
        assert "Image_evidence: \n" in record.instruction_text
        assert record.target_text == terminal_sentence(extract_label(record.target_text))


def test_apply_ablation_no_evidence_requires_instances():
    records, _ = _records(3)
    with pytest.raises(ValueError):
        list(ds.apply_ablation(records, ds.ABLATION_NO_EVIDENCE_NO_RATIONALE))


def _labeled_records(per_class: dict[StandardLabel, int]) -> list[InstructionRecord]:
    records = []
    for label, count in per_class.items():
        for i in range(count):
            records.append(InstructionRecord(
                post_id=f"{label.surface}-{i}",
                instruction_text="instruction",
                image=None,
                target_text=terminal_sentence(label),
            ))
    return records


def test_split_stratified_sizes():
    records = _labeled_records({StandardLabel.NON_RUMOR: 34,
                                StandardLabel.RUMOR: 33,
                                StandardLabel.UNVERIFIED: 33})
    train, test = ds.split_dataset(records, 0.1, seed=7)
    per_class = Counter(extract_label(r.target_text) for r in test)
    assert all(size in (3, 4) for size in per_class.values())
    assert 9 <= len(test) <= 11
    assert len(train) + len(test) == 100


def test_split_deterministic_and_disjoint():
    records = _labeled_records({StandardLabel.NON_RUMOR: 20,
                                StandardLabel.RUMOR: 25,
                                StandardLabel.UNVERIFIED: 15})
    first = ds.split_dataset(records, 0.25, seed=3)
    second = ds.split_dataset(records, 0.25, seed=3)
    assert first == second
    train_ids = {r.post_id for r in first[0]}
    test_ids = {r.post_id for r in first[1]}
    assert train_ids & test_ids == set()
    assert train_ids | test_ids == {r.post_id for r in records}
    different = ds.split_dataset(records, 0.25, seed=4)
    assert {r.post_id for r in different[1]} != test_ids


def test_split_explicit_assignments_pass_through():
    records = _labeled_records({StandardLabel.RUMOR: 4})
    assignments = {"rumor-0": "test", "rumor-2": "test"}
    train, test = ds.split_dataset(records, 0.5, seed=0, assignments=assignments)
    assert {r.post_id for r in test} == {"rumor-0", "rumor-2"}
    assert all(r.split == "test" for r in test)
    assert all(r.split == "train" for r in train)


def test_split_empty_input():
    with pytest.raises(EmptyInput):
        ds.split_dataset([], 0.5, seed=0)


REFERENCE_COUNTS = {
    "train": {StandardLabel.NON_RUMOR: 3592, StandardLabel.RUMOR: 2392,
              StandardLabel.UNVERIFIED: 5200},
    "test": {StandardLabel.NON_RUMOR: 421, StandardLabel.RUMOR: 280,
             StandardLabel.UNVERIFIED: 608},
}


def reference_corpus() -> list[InstructionRecord]:
    records = []
    for split, per_class in REFERENCE_COUNTS.items():
        for label, count in per_class.items():
            for i in range(count):
                records.append(InstructionRecord(
                    post_id=f"{split}-{label.surface}-{i}",
                    instruction_text="instruction",
                    image=None,
                    target_text=terminal_sentence(label),
                    split=split,
                ))
    return records


def test_dataset_stats_reference_counts():
    stats = ds.dataset_stats(reference_corpus())
    assert stats["train"]["total"] == 11184
    assert stats["test"]["total"] == 1309
    assert stats["total"]["total"] == 12493
    assert stats["total"]["non_rumor"] == 4013
    assert stats["total"]["rumor"] == 2672
    assert stats["total"]["unverified"] == 5808


def test_dataset_stats_empty_is_all_zeros():
    stats = ds.dataset_stats([])
    assert stats["train"]["total"] == 0
    assert stats["test"]["total"] == 0
    assert stats["total"]["total"] == 0


def test_dataset_stats_one_record_per_class():
    records = _labeled_records({label: 1 for label in ALL_LABELS})
    stats = ds.dataset_stats(records)
    assert stats["train"] == {"non_rumor": 1, "rumor": 1, "unverified": 1, "total": 3}


def test_format_stats_table_uses_thousands_separators():
    table = ds.format_stats_table(ds.dataset_stats(reference_corpus()))
    assert "11,184" in table
    assert "1,309" in table
    assert "12,493" in table


def test_length_histogram_buckets():
    recs = [
        InstructionRecord(post_id="a", instruction_text="x" * 4, image=None,
                          target_text="y" * 5),   # rendered length 10 chars
        InstructionRecord(post_id="b", instruction_text="x" * 12, image=None,
                          target_text="y" * 12),  # rendered length 25 chars
    ]
    instances = {"a": zero_evidence_instance(), "b": zero_evidence_instance()}
    rows = ds.length_histogram(recs, instances, unit=ds.UNIT_CHARS, bucket_width=10)
    assert rows == [
        {"m": 0, "n": 0, "bucket_start": 10, "bucket_end": 20, "count": 1},
        {"m": 0, "n": 0, "bucket_start": 20, "bucket_end": 30, "count": 1},
    ]


def test_length_histogram_conservation():
    records, instances = _records(60, seed=11)
    rows = ds.length_histogram(records, instances, bucket_width=20)
    # independent recount of group sizes straight from the instances
    expected = Counter(
        (len(instances[r.post_id].textual_evidence), len(instances[r.post_id].visual_evidence))
        for r in records)
    summed = Counter()
    for row in rows:
        summed[(row["m"], row["n"])] += row["count"]
    assert summed == expected


def test_record_file_field_order(tmp_path):
    records, _ = _records(3)
    path = tmp_path / "records.jsonl"
    ds.write_records(path, records)
    with open(path, encoding="utf-8") as handle:
        first = json.loads(handle.readline())
    assert list(first) == ["post_id", "instruction_text", "image", "target_text", "split"]
    assert ds.read_records(path) == records
