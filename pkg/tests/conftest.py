from __future__ import annotations

import random
from pathlib import Path

import pytest
from PIL import Image

from rumordistill.models import (ALL_LABELS, ProcessedInstance, StandardLabel,
                                 TextualEvidence, VisualDigest, VisualEvidence)

FIXTURES = Path(__file__).parent / "fixtures"
GOLDENS = Path(__file__).parent / "goldens"


def make_png(path: Path, color=(10, 200, 30)) -> bytes:
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.new("RGB", (4, 4), color).save(path, format="PNG")
    return path.read_bytes()


@pytest.fixture
def png_file(tmp_path):
    def _make(name="img.png", color=(10, 200, 30)) -> Path:
        path = tmp_path / name
        make_png(path, color)
        return path
    return _make


def zero_evidence_instance() -> ProcessedInstance:
    return ProcessedInstance(
        post_id="fx-zero",
        text="Officials opened the new bridge to traffic this morning.",
        digest=VisualDigest(ocr_text="", caption_text="a bridge over a river at sunrise"),
    )


def chinese_instance() -> ProcessedInstance:
    return ProcessedInstance(
        post_id="fx-zh",
        text="天津一女子在路上扶起了摔倒的老人帮忙送去救治并垫付3000元，老人清醒后指认是女子撞到了他。",
        digest=VisualDigest(
            ocr_text="老人跌倒路边一直求救女子暖心扶起帮老人找家我拉你一下好不好@历史课课代表",
            caption_text="an old man lying on the ground with his head down"),
        textual_evidence=(
            TextualEvidence(title="微博轻享版", description="任何值得称道的正义之光，都应建立在事实之上。", rank=0),
        ),
        visual_evidence=(),
    )


def full_instance() -> ProcessedInstance:
    return ProcessedInstance(
        post_id="fx-full",
        text="While India is in denial about border tensions, accounts shared this photo of soldiers on the ground.",
        digest=VisualDigest(
            ocr_text="@Lz1277 87829",
            caption_text="soldiers lay on the ground while others stand around them"),
        textual_evidence=tuple(
            TextualEvidence(title=f"Report {i}", description=f"coverage item {i}", rank=i)
            for i in range(3)),
        visual_evidence=tuple(
            VisualEvidence(image_title=f"Photo {i}", image_ocr="" if i else "LIVE",
                           image_caption=f"a scene {i} near the border", rank=i)
            for i in range(3)),
    )


GOLDEN_CASES = {
    "zero_evidence": (zero_evidence_instance, StandardLabel.NON_RUMOR),
    "chinese": (chinese_instance, StandardLabel.RUMOR),
    "full": (full_instance, StandardLabel.UNVERIFIED),
}

_WORDS = ("river", "bridge", "crowd", "storm", "convoy", "harbor", "market",
          "signal", "北区", "夜间", "record", "window")


def random_instance(rng: random.Random) -> ProcessedInstance:
    """Instance with arbitrary counts and benign text for property tests."""
    def words(k: int) -> str:
        return " ".join(rng.choice(_WORDS) for _ in range(k))

    m = rng.randrange(0, 5)
    n = rng.randrange(0, 5)
    return ProcessedInstance(
        post_id=f"rnd-{rng.randrange(10**6):06d}",
        text=words(rng.randrange(1, 12)),
        digest=VisualDigest(
            ocr_text=words(rng.randrange(0, 5)),
            caption_text=words(rng.randrange(1, 8))),
        textual_evidence=tuple(
            TextualEvidence(title=words(2), description=words(5), rank=i)
            for i in range(m)),
        visual_evidence=tuple(
            VisualEvidence(image_title=words(2), image_ocr=words(rng.randrange(0, 3)),
                           image_caption=words(4), rank=i)
            for i in range(n)),
    )


def random_gold(rng: random.Random) -> StandardLabel:
    return ALL_LABELS[rng.randrange(3)]
