from __future__ import annotations

import json
import re
from pathlib import Path

import pytest

LABELS = ("non-rumor", "rumor", "unverified")
_TOPICS = ("flood", "storm", "crowd", "bridge", "convoy", "station", "harbor", "market")

# independent extraction oracle for the serve round-trip checks
LABEL_RE = re.compile(r"<label>\s*(non-rumor|rumor|unverified)\s*</label>", re.IGNORECASE)


def terminal_sentence(label: str) -> str:
    return f"Therefore, the post is labeled as <label> {label} </label>."


def smoke_records(count: int = 32) -> list[dict]:
    """Compact no-rationale-style records that fit the tiny context window."""
    records = []
    for i in range(count):
        label = LABELS[i % 3]
        instruction = (f"## Post\npost {i:02d}: reports about the {_TOPICS[i % 8]} {i}\n"
                       "## Explanation\nExplain and label the post in three-way "
                       'classification scheme: ["non-rumor", "rumor", "unverified"].')
        records.append({
            "post_id": f"p{i:03d}",
            "instruction_text": instruction,
            "image": None,
            "target_text": terminal_sentence(label),
            "split": "train",
        })
    return records


def write_records(path: Path, records: list[dict]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n", encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def smoke_corpus_file(tmp_path_factory) -> Path:
    return write_records(tmp_path_factory.mktemp("corpus") / "train.jsonl",
                         smoke_records(32))
