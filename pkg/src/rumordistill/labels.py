"""Fine-grained label vocabulary and label extraction from generated text.

The vocabulary is closed: the committed table file is the whole universe of
fine-grained verdict strings, each mapping to exactly one standardized class.
Extraction never throws; unparseable outputs come back as PARSE_FAILURE.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Mapping, Union

from .models import ALL_LABELS, FineGrainedLabel, StandardLabel
from .util import collapse_whitespace


class _ParseFailure:
    """Singleton marker for a model output with no extractable label."""

    __slots__ = ()

    def __repr__(self) -> str:
        return "ParseFailure"

    def __bool__(self) -> bool:
        return False


PARSE_FAILURE = _ParseFailure()

Prediction = Union[StandardLabel, _ParseFailure]


def canonicalize(s: str) -> str:
    """Lowercase, trim, collapse internal whitespace, strip trailing periods."""
    s = collapse_whitespace(s).lower()
    return s.rstrip(".").rstrip()


@dataclass(frozen=True)
class LabelTable:
    entries: tuple[FineGrainedLabel, ...]
    index: Mapping[str, StandardLabel]

    @classmethod
    def from_rows(cls, rows: Iterable[tuple[str, StandardLabel]]) -> "LabelTable":
        entries: list[FineGrainedLabel] = []
        index: dict[str, StandardLabel] = {}
        for text, standard in rows:
            entries.append(FineGrainedLabel(canonical_text=text, standard=standard))
            key = canonicalize(text)
            if key in index and index[key] is not standard:
                # e.g. "Misleading" vs "Misleading." may collide, but only
                # within one class; a cross-class collision is a broken table.
                raise ValueError(f"canonical collision across classes: {text!r}")
            index.setdefault(key, standard)
        return cls(entries=tuple(entries), index=index)

    def by_class(self, label: StandardLabel) -> tuple[FineGrainedLabel, ...]:
        """Entries of one class, in the table's printed order."""
        return tuple(e for e in self.entries if e.standard is label)

    def lookup_entry(self, canonical_key: str) -> FineGrainedLabel | None:
        """First printed entry whose canonical form equals the key."""
        for entry in self.entries:
            if canonicalize(entry.canonical_text) == canonical_key:
                return entry
        return None


def load_table(path=None) -> LabelTable:
    """Load a 'fine_grained<TAB>standard' table; default is the committed one."""
    if path is None:
        text = resources.files("rumordistill.data").joinpath("fine_grained_labels.tsv").read_text("utf-8")
    else:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    rows: list[tuple[str, StandardLabel]] = []
    for line in text.splitlines():
        if not line.strip():
            continue
        fine, _, standard = line.partition("\t")
        rows.append((fine, StandardLabel.from_surface(standard)))
    return LabelTable.from_rows(rows)


_DEFAULT_TABLE: LabelTable | None = None


def default_table() -> LabelTable:
    global _DEFAULT_TABLE
    if _DEFAULT_TABLE is None:
        _DEFAULT_TABLE = load_table()
    return _DEFAULT_TABLE


def normalize_fine_grained(s: str, table: LabelTable | None = None) -> StandardLabel | None:
    """Map a fine-grained verdict string to its class; None when unknown."""
    table = table or default_table()
    return table.index.get(canonicalize(s))


_SURFACE_ALT = "non-rumor|rumor|unverified"
_TAGGED_RE = re.compile(rf"<label>\s*({_SURFACE_ALT})\s*</label>", re.IGNORECASE)
_TAGGED_AT_END_RE = re.compile(
    rf"<label>\s*({_SURFACE_ALT})\s*</label>\s*[.!]?\s*$", re.IGNORECASE)
_UNTAGGED_RE = re.compile(
    rf"\blabeled\s+as\s+(?:an?\s+)?[\"'“‘]?({_SURFACE_ALT})\b", re.IGNORECASE)


def extract_label(generated: str) -> Prediction:
    """Pull the standardized label out of a generated explanation.

    The last tagged form ``<label> X </label>`` wins; if there is none, the
    last untagged ``labeled as X`` sentence is used; otherwise PARSE_FAILURE.
    """
    matches = list(_TAGGED_RE.finditer(generated))
    if not matches:
        matches = list(_UNTAGGED_RE.finditer(generated))
    if not matches:
        return PARSE_FAILURE
    return StandardLabel.from_surface(matches[-1].group(1))


def trailing_label(text: str) -> StandardLabel | None:
    """Label named by a terminal tagged sentence at the very end, if any."""
    match = _TAGGED_AT_END_RE.search(text)
    if match is None:
        return None
    return StandardLabel.from_surface(match.group(1))


def terminal_sentence(label: StandardLabel) -> str:
    """The forced closing sentence that makes outputs machine-extractable."""
    return f"Therefore, the post is labeled as <label> {label.surface} </label>."


_QUOTED_RE = re.compile(r"[\"“]([^\"“”]{1,80})[\"”]")
# periods delimit segments too: no table entry has an internal period, and
# canonicalization strips trailing ones, so nothing matchable is lost
_SEGMENT_RE = re.compile(r"[^,:;.\n]+")


def _mention_candidates(text: str) -> list[tuple[int, str]]:
    """(position, candidate) pairs: quoted spans plus comma-delimited segments."""
    candidates: list[tuple[int, str]] = []
    for match in _QUOTED_RE.finditer(text):
        candidates.append((match.start(1), match.group(1)))
    for match in _SEGMENT_RE.finditer(text):
        segment = match.group(0).strip()
        for prefix in ("and ", "or "):
            if segment.lower().startswith(prefix):
                segment = segment[len(prefix):].strip()
        if segment:
            candidates.append((match.start(), segment))
    return candidates


def extract_fine_grained(generated: str,
                         table: LabelTable | None = None) -> list[FineGrainedLabel]:
    """All table entries mentioned (quoted or comma-delimited) in the text.

    Deduplicated by canonical form, in first-mention order. Strings outside
    the closed vocabulary are ignored even when they look label-like.
    """
    table = table or default_table()
    hits: list[tuple[int, str]] = []
    for pos, candidate in _mention_candidates(generated):
        key = canonicalize(candidate.rstrip(",;").rstrip())
        if key and key in table.index:
            hits.append((pos, key))
    hits.sort(key=lambda item: item[0])
    seen: set[str] = set()
    out: list[FineGrainedLabel] = []
    for _, key in hits:
        if key in seen:
            continue
        seen.add(key)
        entry = table.lookup_entry(key)
        if entry is not None:
            out.append(entry)
    return out


def class_counts(table: LabelTable | None = None) -> dict[StandardLabel, int]:
    table = table or default_table()
    return {label: len(table.by_class(label)) for label in ALL_LABELS}
