"""Build a small self-contained demo workspace with mock fixtures.

Everything the pipeline needs runs offline: tiny generated images, scripted
OCR/caption tables keyed by image hash, recorded search responses, and a mock
teacher. Used by the end-to-end tests and the README walkthrough.
"""

from __future__ import annotations

import json
import random
from pathlib import Path

from PIL import Image

from .models import ALL_LABELS, Post
from .util import collapse_whitespace, sha256_hex, write_jsonl

_EN_TEXTS = [
    "A photo shows {subject} during the {event} in {place}.",
    "Officials deny that {subject} appeared near {place} last week.",
    "Witnesses claim {subject} was spotted at {place} after the {event}.",
    "Viral post says {subject} caused the {event} reported in {place}.",
]
_ZH_TEXTS = [
    "网传{place}发生{event}，有人称看到{subject}。",
    "一则帖子声称{subject}出现在{place}，引发讨论。",
]
_SUBJECTS = ["a convoy of trucks", "an unidentified aircraft", "a local official",
             "a rescue team", "一名志愿者", "一辆救护车"]
_EVENTS = ["flood", "blackout", "protest", "storm", "地震", "火灾"]
_PLACES = ["Riverton", "Eastfield", "Port Arlen", "南山区", "老城区", "Harbor Bay"]

_OCR_SNIPPETS = ["BREAKING NEWS", "关注我", "LIVE 19:42", "", "@channel_77", ""]
_CAPTIONS = [
    "a crowd of people standing on a wet street",
    "an aerial view of flooded houses",
    "a man holding a sign in front of a building",
    "two trucks parked near a river bank",
    "smoke rising above a row of rooftops",
    "people waiting in line outside a station",
]


def _make_image(path: Path, rng: random.Random) -> bytes:
    color = (rng.randrange(256), rng.randrange(256), rng.randrange(256))
    img = Image.new("RGB", (4, 4), color)
    img.putpixel((rng.randrange(4), rng.randrange(4)),
                 (rng.randrange(256), rng.randrange(256), rng.randrange(256)))
    path.parent.mkdir(parents=True, exist_ok=True)
    img.save(path, format="PNG")
    return path.read_bytes()


def make_workspace(root: Path | str, n_posts: int = 20, seed: int = 0,
                   textual_hits: int = 4, visual_hits: int = 3) -> Path:
    """Write posts, images, fixtures, and a config file under ``root``."""
    root = Path(root)
    rng = random.Random(seed)

    ocr_rows: list[str] = []
    caption_rows: list[str] = []
    reverse_image: dict[str, list[dict]] = {}
    text_search: dict[str, list[dict]] = {}

    # a shared pool of evidence images, each with scripted OCR + caption
    pool: list[str] = []
    for i in range(6):
        rel = f"images/evidence_{i:02d}.png"
        data = _make_image(root / rel, rng)
        key = sha256_hex(data)
        ocr_rows.append(f"{key}\t{_OCR_SNIPPETS[i % len(_OCR_SNIPPETS)]}")
        caption_rows.append(f"{key}\t{_CAPTIONS[i % len(_CAPTIONS)]}")
        pool.append(rel)

    posts: list[Post] = []
    for i in range(n_posts):
        rel = f"images/post_{i:04d}.png"
        data = _make_image(root / rel, rng)
        key = sha256_hex(data)
        ocr_rows.append(f"{key}\t{_OCR_SNIPPETS[(i + 1) % len(_OCR_SNIPPETS)]}")
        caption_rows.append(f"{key}\t{_CAPTIONS[(i + 2) % len(_CAPTIONS)]}")

        if i % 5 == 4:
            template = rng.choice(_ZH_TEXTS)
            hint = "zh"
        else:
            template = rng.choice(_EN_TEXTS)
            hint = "en"
        text = f"[{i:04d}] " + template.format(subject=rng.choice(_SUBJECTS),
                                               event=rng.choice(_EVENTS),
                                               place=rng.choice(_PLACES))
        posts.append(Post(id=f"post-{i:04d}", text=text, image=rel,
                          gold_label=ALL_LABELS[i % 3], language_hint=hint))

        reverse_image[key] = [
            {"title": f"Archive item {i}-{j}",
             "description": f"Earlier coverage {j} related to post {i:04d}.",
             "url": f"https://example.test/{i}/{j}"}
            for j in range(textual_hits)
        ]
        text_search[sha256_hex(collapse_whitespace(text))] = [
            {"title": f"Similar image {i}-{j}",
             "image": pool[(i + j) % len(pool)],
             "url": f"https://example.test/img/{i}/{j}"}
            for j in range(visual_hits)
        ]

    write_jsonl(root / "posts" / "posts.jsonl", (p.to_dict() for p in posts))
    fixtures = root / "fixtures"
    fixtures.mkdir(parents=True, exist_ok=True)
    (fixtures / "ocr_fixtures.tsv").write_text("\n".join(ocr_rows) + "\n", encoding="utf-8")
    (fixtures / "caption_fixtures.tsv").write_text("\n".join(caption_rows) + "\n", encoding="utf-8")
    (fixtures / "search_fixtures.json").write_text(
        json.dumps({"reverse_image": reverse_image, "text_search": text_search},
                   ensure_ascii=False, indent=1),
        encoding="utf-8")

    (root / "workspace.cfg").write_text(
        "# demo workspace: everything mocked, fully offline\n"
        "visual.ocr.backend = mock\n"
        "visual.ocr.fixture = fixtures/ocr_fixtures.tsv\n"
        "visual.caption.backend = mock\n"
        "visual.caption.fixture = fixtures/caption_fixtures.tsv\n"
        "retrieval.engine = mock\n"
        "retrieval.fixture = fixtures/search_fixtures.json\n"
        "retrieval.max_textual = 3\n"
        "retrieval.max_visual = 3\n"
        "teacher.backend = mock\n"
        "teacher.model_id = mock-teacher\n"
        "eval.client = echo\n"
        "split.test_fraction = 0.2\n"
        "split.seed = 7\n",
        encoding="utf-8")
    return root
