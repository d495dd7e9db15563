from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from conftest import chinese_instance, full_instance, random_gold, random_instance
from rumordistill.cache import FileCache
from rumordistill.errors import (BudgetExhausted, ConfigError, EmptyCompletion,
                                 LabelConflict)
from rumordistill.labels import extract_label, terminal_sentence
from rumordistill.models import ALL_LABELS, StandardLabel
from rumordistill.prompts import render_labeling_prompt
from rumordistill.teacher import (TeacherConfig, TeacherSession,
                                  append_label_suffix, elicit_rationale,
                                  run_elicitation_batch)
from rumordistill.util import read_jsonl

import random


def test_append_label_suffix_appends_tagged_sentence():
    out = append_label_suffix("explanation text because evidence conflicts.",
                              StandardLabel.RUMOR)
    assert out.endswith("Therefore, the post is labeled as <label> rumor </label>.")
    assert extract_label(out) is StandardLabel.RUMOR


def test_append_label_suffix_idempotent():
    first = append_label_suffix("reasoning.", StandardLabel.NON_RUMOR)
    assert append_label_suffix(first, StandardLabel.NON_RUMOR) == first


def test_append_label_suffix_conflict_quarantines():
    ending_wrong = "reasoning. " + terminal_sentence(StandardLabel.NON_RUMOR)
    with pytest.raises(LabelConflict):
        append_label_suffix(ending_wrong, StandardLabel.RUMOR)


def test_mid_text_label_mention_is_not_a_terminal_sentence():
    text = terminal_sentence(StandardLabel.NON_RUMOR) + " More prose afterwards."
    out = append_label_suffix(text, StandardLabel.RUMOR)
    assert extract_label(out) is StandardLabel.RUMOR


@given(st.text(alphabet=st.characters(blacklist_characters="<>"), min_size=1, max_size=120),
       st.sampled_from(list(ALL_LABELS)))
def test_append_extract_round_trip(text, gold):
    try:
        out = append_label_suffix(text, gold)
    except LabelConflict:
        return
    assert extract_label(out) is gold


def _mock_cfg(tmp_path=None, **kwargs) -> TeacherConfig:
    cfg = TeacherConfig(backend="mock", model_id="mock-teacher", **kwargs)
    if tmp_path is not None:
        cfg.cache = FileCache(tmp_path / "cache")
    return cfg


def test_elicit_rationale_builds_complete_record(tmp_path):
    cfg = _mock_cfg(tmp_path, mock_text='The photo looks "Doctored" and "Out of Context".')
    instance = full_instance()
    record = elicit_rationale(instance, StandardLabel.RUMOR, TeacherSession(cfg))
    assert record.post_id == instance.post_id
    assert record.terminal_label is StandardLabel.RUMOR
    assert record.output_text.endswith(terminal_sentence(StandardLabel.RUMOR))
    assert [f.canonical_text for f in record.fine_grained] == ["Doctored", "Out of Context"]
    assert record.prompt_fingerprint == render_labeling_prompt(
        instance, StandardLabel.RUMOR).fingerprint
    assert record.teacher_id == "mock-teacher"


def test_empty_completion_is_an_error():
    cfg = _mock_cfg(mock_text="")
    with pytest.raises(EmptyCompletion):
        elicit_rationale(chinese_instance(), StandardLabel.RUMOR, TeacherSession(cfg))


def test_warm_cache_rerun_spends_no_requests(tmp_path):
    cfg = _mock_cfg(tmp_path)
    first_session = TeacherSession(cfg)
    first = elicit_rationale(chinese_instance(), StandardLabel.RUMOR, first_session)
    assert first_session.requests_spent == 1

    second_session = TeacherSession(cfg)
    second = elicit_rationale(chinese_instance(), StandardLabel.RUMOR, second_session)
    assert second_session.requests_spent == 0
    assert second == first


def test_config_invariants():
    with pytest.raises(ConfigError):
        TeacherConfig(backend="mock", max_output_tokens=32).validate()
    with pytest.raises(ConfigError):
        TeacherConfig(backend="http").validate()
    with pytest.raises(ConfigError):
        TeacherConfig(temperature=-1).validate()


def _batch_items(count: int):
    rng = random.Random(42)
    return [(random_instance(rng), random_gold(rng)) for _ in range(count)]


def test_batch_fresh_run_succeeds(tmp_path):
    items = _batch_items(20)
    report = run_elicitation_batch(items, _mock_cfg(), tmp_path / "r.jsonl")
    assert report.succeeded == 20
    assert report.failed == 0
    assert report.quarantined == 0
    assert report.requests_spent == 20
    assert len(list(read_jsonl(tmp_path / "r.jsonl"))) == 20


def test_batch_resume_skips_everything(tmp_path):
    items = _batch_items(20)
    run_elicitation_batch(items, _mock_cfg(), tmp_path / "r.jsonl")
    report = run_elicitation_batch(items, _mock_cfg(), tmp_path / "r.jsonl", resume=True)
    assert report.requests_spent == 0
    assert report.skipped == 20
    assert report.succeeded == 0


def test_batch_budget_cap(tmp_path):
    items = _batch_items(20)
    report = run_elicitation_batch(items, _mock_cfg(cost_budget=5), tmp_path / "r.jsonl")
    assert report.succeeded == 5
    assert report.budget_exhausted
    assert report.requests_spent == 5
    assert len(list(read_jsonl(tmp_path / "r.jsonl"))) == 5


def test_batch_resume_after_interruption_matches_uninterrupted_run(tmp_path):
    items = _batch_items(12)
    # interrupted run: budget stops after 4 items
    run_elicitation_batch(items, _mock_cfg(cost_budget=4), tmp_path / "resumed.jsonl")
    report = run_elicitation_batch(items, _mock_cfg(), tmp_path / "resumed.jsonl", resume=True)
    assert report.succeeded == 8 and report.skipped == 4

    run_elicitation_batch(items, _mock_cfg(), tmp_path / "single.jsonl")
    resumed = list(read_jsonl(tmp_path / "resumed.jsonl"))
    single = list(read_jsonl(tmp_path / "single.jsonl"))
    assert resumed == single


def test_batch_quarantines_conflicting_teacher_output(tmp_path):
    # teacher insists on non-rumor; gold says rumor for half the items
    cfg = _mock_cfg(mock_text="Looks fine. " + terminal_sentence(StandardLabel.NON_RUMOR))
    rng = random.Random(1)
    items = [(random_instance(rng),
              StandardLabel.RUMOR if i % 2 else StandardLabel.NON_RUMOR)
             for i in range(10)]
    report = run_elicitation_batch(items, cfg, tmp_path / "r.jsonl",
                                   tmp_path / "q.jsonl")
    assert report.succeeded == 5
    assert report.quarantined == 5
    quarantined = list(read_jsonl(tmp_path / "q.jsonl"))
    assert len(quarantined) == 5
    assert all("non-rumor" in row["reason"] for row in quarantined)
