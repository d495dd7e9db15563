"""Core domain types for the rationale pipeline.

Pure value objects: no file or network I/O here. Everything is a frozen
dataclass or an enum, safe to share between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import Sequence


class StandardLabel(IntEnum):
    """Three-way veracity scheme with fixed integer codes."""

    NON_RUMOR = 0
    RUMOR = 1
    UNVERIFIED = 2

    @property
    def surface(self) -> str:
        """Lowercase-hyphenated form used inside prompts and model outputs."""
        return _SURFACES[self]

    @classmethod
    def from_surface(cls, s: str) -> "StandardLabel":
        key = s.strip().lower()
        for label, surface in _SURFACES.items():
            if key == surface:
                return label
        raise ValueError(f"unknown label surface: {s!r}")

    @classmethod
    def coerce(cls, value: object) -> "StandardLabel":
        """Accept enum members, integer codes, or surface strings."""
        if isinstance(value, StandardLabel):
            return value
        if isinstance(value, int):
            return cls(value)
        return cls.from_surface(str(value))


_SURFACES = {
    StandardLabel.NON_RUMOR: "non-rumor",
    StandardLabel.RUMOR: "rumor",
    StandardLabel.UNVERIFIED: "unverified",
}

ALL_LABELS: tuple[StandardLabel, ...] = (
    StandardLabel.NON_RUMOR,
    StandardLabel.RUMOR,
    StandardLabel.UNVERIFIED,
)


@dataclass(frozen=True)
class FineGrainedLabel:
    """A fact-checker verdict string tied to exactly one standardized class."""

    canonical_text: str
    standard: StandardLabel


@dataclass(frozen=True)
class Post:
    """One multimodal social-media item."""

    id: str
    text: str
    image: str | bytes
    gold_label: StandardLabel
    language_hint: str | None = None  # advisory only: "en", "zh", or "unknown"

    def to_dict(self) -> dict:
        if isinstance(self.image, bytes):
            raise ValueError("in-memory image blobs are not serializable; use a path")
        return {
            "id": self.id,
            "text": self.text,
            "image": self.image,
            "gold_label": int(self.gold_label),
            "language_hint": self.language_hint,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Post":
        return cls(
            id=d["id"],
            text=d["text"],
            image=d["image"],
            gold_label=StandardLabel.coerce(d["gold_label"]),
            language_hint=d.get("language_hint"),
        )


@dataclass
class ValidationReport:
    post_id: str
    problems: list[str] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.problems


def validate_post(post: Post, image_base: Path | str | None = None) -> ValidationReport:
    """Check Post invariants. Never raises; every violation is reported."""
    report = ValidationReport(post_id=post.id)
    if not post.id:
        report.problems.append("empty id")
    if not isinstance(post.text, str):
        report.problems.append("text is not a string")
    if post.language_hint not in (None, "en", "zh", "unknown"):
        report.problems.append(f"unknown language_hint: {post.language_hint!r}")
    if isinstance(post.image, bytes):
        if not post.image:
            report.problems.append("image unresolvable")
    else:
        path = Path(post.image) if post.image else None
        if path is not None and image_base is not None and not path.is_absolute():
            path = Path(image_base) / path
        if path is None or not path.is_file():
            report.problems.append("image unresolvable")
    return report


def validate_posts(posts: Sequence[Post],
                   image_base: Path | str | None = None) -> list[ValidationReport]:
    """Per-post reports, plus duplicate-id detection across the whole set."""
    reports = [validate_post(p, image_base) for p in posts]
    seen: dict[str, int] = {}
    for idx, post in enumerate(posts):
        if post.id in seen:
            reports[idx].problems.append(f"duplicate id: {post.id}")
        else:
            seen[post.id] = idx
    return reports


@dataclass(frozen=True)
class VisualDigest:
    """OCR text plus caption for one image, whitespace-normalized."""

    ocr_text: str      # empty string when nothing was detected
    caption_text: str  # never empty

    def to_dict(self) -> dict:
        return {"ocr_text": self.ocr_text, "caption_text": self.caption_text}

    @classmethod
    def from_dict(cls, d: dict) -> "VisualDigest":
        return cls(ocr_text=d["ocr_text"], caption_text=d["caption_text"])


@dataclass(frozen=True)
class TextualEvidence:
    """One reverse-image-search hit: title and description of a similar page."""

    title: str
    description: str
    source_url: str | None = None
    rank: int = 0

    def to_dict(self) -> dict:
        return {
            "title": self.title,
            "description": self.description,
            "source_url": self.source_url,
            "rank": self.rank,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TextualEvidence":
        return cls(
            title=d["title"],
            description=d["description"],
            source_url=d.get("source_url"),
            rank=int(d["rank"]),
        )


@dataclass(frozen=True)
class VisualEvidence:
    """One text-search image hit after digesting: title, OCR, and caption."""

    image_title: str
    image_ocr: str
    image_caption: str
    source_url: str | None = None
    rank: int = 0

    def to_dict(self) -> dict:
        return {
            "image_title": self.image_title,
            "image_ocr": self.image_ocr,
            "image_caption": self.image_caption,
            "source_url": self.source_url,
            "rank": self.rank,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VisualEvidence":
        return cls(
            image_title=d["image_title"],
            image_ocr=d["image_ocr"],
            image_caption=d["image_caption"],
            source_url=d.get("source_url"),
            rank=int(d["rank"]),
        )


@dataclass(frozen=True)
class ProcessedInstance:
    """A post after augmentation: text, visual digest, and capped evidence.

    Evidence lists are kept sorted by rank ascending.
    """

    post_id: str
    text: str
    digest: VisualDigest
    textual_evidence: tuple[TextualEvidence, ...] = ()
    visual_evidence: tuple[VisualEvidence, ...] = ()

    def to_dict(self) -> dict:
        return {
            "post_id": self.post_id,
            "text": self.text,
            "digest": self.digest.to_dict(),
            "textual_evidence": [e.to_dict() for e in self.textual_evidence],
            "visual_evidence": [e.to_dict() for e in self.visual_evidence],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ProcessedInstance":
        return cls(
            post_id=d["post_id"],
            text=d["text"],
            digest=VisualDigest.from_dict(d["digest"]),
            textual_evidence=tuple(TextualEvidence.from_dict(e) for e in d["textual_evidence"]),
            visual_evidence=tuple(VisualEvidence.from_dict(e) for e in d["visual_evidence"]),
        )


@dataclass(frozen=True)
class RationaleRecord:
    """A teacher output: explanation text ending in the terminal-label sentence."""

    post_id: str
    output_text: str
    fine_grained: tuple[FineGrainedLabel, ...]
    terminal_label: StandardLabel
    prompt_fingerprint: str
    teacher_id: str

    def to_dict(self) -> dict:
        return {
            "post_id": self.post_id,
            "output_text": self.output_text,
            "fine_grained": [f.canonical_text for f in self.fine_grained],
            "terminal_label": int(self.terminal_label),
            "prompt_fingerprint": self.prompt_fingerprint,
            "teacher_id": self.teacher_id,
        }


@dataclass(frozen=True)
class InstructionRecord:
    """One training example: inference prompt, optional image, target output."""

    post_id: str
    instruction_text: str
    image: str | None
    target_text: str
    split: str = "train"  # "train" or "test"

    def to_dict(self) -> dict:
        return {
            "post_id": self.post_id,
            "instruction_text": self.instruction_text,
            "image": self.image,
            "target_text": self.target_text,
            "split": self.split,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "InstructionRecord":
        return cls(
            post_id=d["post_id"],
            instruction_text=d["instruction_text"],
            image=d.get("image"),
            target_text=d["target_text"],
            split=d.get("split", "train"),
        )
