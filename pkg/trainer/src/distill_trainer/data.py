"""Build a tokenized training corpus from instruction-record JSON-Lines.

Record schema (one JSON object per line): post_id, instruction_text, image
(optional reference, kept as metadata), target_text, split. Each example is
the concatenation of instruction and target with a loss mask that is 0 over
the instruction tokens and 1 over the target segment; the target segment
includes the end-of-sequence marker so students learn to stop.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import EmptyTarget, SchemaViolation
from .tokenizer import ByteTokenizer

# generation starts after this boundary at serve time too
PROMPT_BOUNDARY = "\n"

_REQUIRED = ("post_id", "instruction_text", "target_text")


@dataclass
class Example:
    post_id: str
    input_ids: list[int]
    loss_mask: list[int]
    image: str | None = None

    @property
    def target_token_count(self) -> int:
        return sum(self.loss_mask)


def encode_example(record: dict, tokenizer: ByteTokenizer,
                   max_seq_len: int | None = None) -> Example:
    for key in _REQUIRED:
        if key not in record or not isinstance(record[key], str):
            raise SchemaViolation(f"record missing field {key!r}: "
                                  f"{record.get('post_id', '<no id>')}")
    target = record["target_text"]
    if not target.strip():
        raise EmptyTarget(f"record {record['post_id']} has an empty target")

    prompt_ids = [tokenizer.bos_id] + tokenizer.encode(
        record["instruction_text"] + PROMPT_BOUNDARY)
    target_ids = tokenizer.encode(target) + [tokenizer.eos_id]
    input_ids = prompt_ids + target_ids
    loss_mask = [0] * len(prompt_ids) + [1] * len(target_ids)
    if max_seq_len is not None and len(input_ids) > max_seq_len:
        # keep the tail: the instruction's end plus the whole target
        input_ids = input_ids[-max_seq_len:]
        loss_mask = loss_mask[-max_seq_len:]
    return Example(post_id=record["post_id"], input_ids=input_ids,
                   loss_mask=loss_mask, image=record.get("image"))


def build_training_corpus(records_path: Path | str, tokenizer: ByteTokenizer,
                          max_seq_len: int | None = None) -> list[Example]:
    """Tokenize every record, preserving file order (shuffling is the
    trainer's job and is seeded there)."""
    examples: list[Example] = []
    with open(records_path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, 1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaViolation(f"line {line_no} is not JSON: {exc}") from exc
            examples.append(encode_example(record, tokenizer, max_seq_len))
    return examples
