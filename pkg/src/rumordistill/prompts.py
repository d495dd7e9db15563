"""Byte-exact rendering of the labeling and inference prompts.

Both renderers substitute instance fields into committed template skeletons
(see data/). Substitution is a single linear pass over the skeleton, so brace
characters inside post text or evidence can never be re-interpreted.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from typing import Sequence

from .labels import LabelTable, default_table
from .models import ProcessedInstance, StandardLabel, TextualEvidence, VisualEvidence
from .util import sha256_hex

KIND_LABELING = "labeling"
KIND_INFERENCE = "inference"

EVIDENCE_SEPARATOR = " <and> "

_PLACEHOLDER_RE = re.compile(
    r"\{(fine_grained_labels|post_text|image_ocr|image_caption|"
    r"textual_evidence|visual_evidence|label)\}")


@dataclass(frozen=True)
class RenderedPrompt:
    text: str
    kind: str
    fingerprint: str


def _load_skeleton(name: str) -> str:
    text = resources.files("rumordistill.data").joinpath(name).read_text("utf-8")
    return text.rstrip("\n")


_LABELING_SKELETON: str | None = None
_INFERENCE_SKELETON: str | None = None


def labeling_skeleton() -> str:
    global _LABELING_SKELETON
    if _LABELING_SKELETON is None:
        _LABELING_SKELETON = _load_skeleton("labeling_template.txt")
    return _LABELING_SKELETON


def inference_skeleton() -> str:
    global _INFERENCE_SKELETON
    if _INFERENCE_SKELETON is None:
        _INFERENCE_SKELETON = _load_skeleton("inference_template.txt")
    return _INFERENCE_SKELETON


def _substitute(skeleton: str, values: dict[str, str]) -> str:
    return _PLACEHOLDER_RE.sub(lambda m: values[m.group(1)], skeleton)


def render_textual_evidence_item(item: TextualEvidence) -> str:
    return f"{item.title}: {item.description}"


def render_visual_evidence_item(item: VisualEvidence) -> str:
    return (f"image_title: {item.image_title}, image_ocr: {item.image_ocr}, "
            f"image_caption: {item.image_caption}")


def textual_evidence_field(items: Sequence[TextualEvidence]) -> str:
    return EVIDENCE_SEPARATOR.join(render_textual_evidence_item(i) for i in items)


def visual_evidence_field(items: Sequence[VisualEvidence]) -> str:
    return EVIDENCE_SEPARATOR.join(render_visual_evidence_item(i) for i in items)


def fine_grained_block(label: StandardLabel, table: LabelTable | None = None) -> str:
    """Comma-separated canonical spellings for one class, in printed order."""
    table = table or default_table()
    return ", ".join(e.canonical_text for e in table.by_class(label))


def _instance_values(instance: ProcessedInstance) -> dict[str, str]:
    return {
        "post_text": instance.text,
        "image_ocr": instance.digest.ocr_text,
        "image_caption": instance.digest.caption_text,
        "textual_evidence": textual_evidence_field(instance.textual_evidence),
        "visual_evidence": visual_evidence_field(instance.visual_evidence),
    }


def render_labeling_prompt(instance: ProcessedInstance, gold: StandardLabel,
                           table: LabelTable | None = None) -> RenderedPrompt:
    """Instantiate the teacher-facing template for one instance and gold label.

    The fine-grained block carries only the entries of the gold class; the
    label line and the closing instruction both name the gold surface form.
    """
    values = _instance_values(instance)
    values["fine_grained_labels"] = fine_grained_block(gold, table)
    values["label"] = gold.surface
    text = _substitute(labeling_skeleton(), values)
    return RenderedPrompt(text=text, kind=KIND_LABELING, fingerprint=sha256_hex(text))


def render_inference_prompt(instance: ProcessedInstance) -> RenderedPrompt:
    """Instantiate the label-free template used at student training/inference.

    The post and evidence sections are byte-identical to the labeling prompt
    for the same instance; every label-bearing block is absent.
    """
    text = _substitute(inference_skeleton(), _instance_values(instance))
    return RenderedPrompt(text=text, kind=KIND_INFERENCE, fingerprint=sha256_hex(text))


_SECTION_RE = re.compile(r"^## ", re.MULTILINE)


def split_sections(prompt_text: str) -> dict[str, str]:
    """Map section header line -> section body (text up to the next header).

    The preamble before the first header is keyed by the empty string.
    """
    sections: dict[str, str] = {}
    boundaries = [m.start() for m in _SECTION_RE.finditer(prompt_text)] + [len(prompt_text)]
    sections[""] = prompt_text[: boundaries[0]]
    for start, end in zip(boundaries, boundaries[1:]):
        chunk = prompt_text[start:end]
        header, _, body = chunk.partition("\n")
        sections[header] = body
    return sections
