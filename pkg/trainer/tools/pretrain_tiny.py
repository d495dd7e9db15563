"""Produce the committed tiny-64 base snapshot.

Full-parameter byte-level pretraining on a generated text mixture: pseudo-news
prose, markdown-ish header blocks, quoted option lists, and standalone
labeled-verdict sentences. The mixture teaches byte statistics and the local
shape of the domain's text, but not the instruction-to-verdict mapping: that
conditional behavior is what adapter fine-tuning has to add, which keeps the
smoke tests meaningful.

Usage: python tools/pretrain_tiny.py [--steps 3000] [--out src/distill_trainer/weights/tiny-64.pt]
"""

from __future__ import annotations

import argparse
import random
import sys
from pathlib import Path

import torch
from torch import nn

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from distill_trainer.model import REGISTRY, TinyCausalLM  # noqa: E402
from distill_trainer.tokenizer import ByteTokenizer  # noqa: E402

SUBJECTS = ["a convoy", "the mayor", "two trucks", "a rescue team", "the bridge",
            "an aircraft", "the river", "a crowd", "the station", "a volunteer"]
VERBS = ["passed", "collapsed", "arrived", "vanished", "reopened", "flooded",
         "gathered", "was spotted", "was closed", "was repaired"]
PLACES = ["near the harbor", "in the old town", "at the border", "downtown",
          "by the river bank", "outside the station", "on the highway"]
LABELS = ["non-rumor", "rumor", "unverified"]
FIELDS = ["text", "image ocr", "image caption", "title", "description"]


def synth_corpus(rng: random.Random, chars: int = 400_000) -> str:
    pieces: list[str] = []
    total = 0
    while total < chars:
        roll = rng.random()
        if roll < 0.45:
            piece = (f"{rng.choice(SUBJECTS).capitalize()} {rng.choice(VERBS)} "
                     f"{rng.choice(PLACES)}.")
        elif roll < 0.62:
            field = rng.choice(FIELDS)
            piece = (f"## {rng.choice(['Post', 'Evidences', 'Explanation', 'Label'])}\n"
                     f"{field}: {rng.choice(SUBJECTS)} {rng.choice(VERBS)} "
                     f"{rng.choice(PLACES)}")
        elif roll < 0.80:
            piece = ('classification scheme: ["non-rumor", "rumor", "unverified"].')
        elif roll < 0.88:
            label = rng.choice(LABELS)
            piece = f"Therefore, the post is labeled as <label> {label} </label>."
        else:
            items = " <and> ".join(
                f"{rng.choice(SUBJECTS)}: {rng.choice(VERBS)} {rng.choice(PLACES)}"
                for _ in range(rng.randrange(1, 4)))
            piece = f"Textual_evidence: {items}"
        pieces.append(piece)
        total += len(piece) + 1
    return "\n".join(pieces)


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--steps", type=int, default=3000)
    parser.add_argument("--batch", type=int, default=16)
    parser.add_argument("--lr", type=float, default=3e-3)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default=str(Path(__file__).resolve().parents[1]
                                             / "src/distill_trainer/weights/tiny-64.pt"))
    args = parser.parse_args()

    torch.manual_seed(args.seed)
    rng = random.Random(args.seed)
    spec = REGISTRY["tiny-64"]
    model = TinyCausalLM(spec)
    tokenizer = ByteTokenizer()

    data = torch.tensor(tokenizer.encode(synth_corpus(rng)), dtype=torch.long)
    window = spec.max_seq_len
    optimizer = torch.optim.AdamW(model.parameters(), lr=args.lr)
    scheduler = torch.optim.lr_scheduler.CosineAnnealingLR(optimizer, args.steps)

    model.train()
    for step in range(args.steps):
        starts = torch.randint(0, len(data) - window - 1, (args.batch,))
        ids = torch.stack([data[s: s + window + 1] for s in starts])
        logits = model(ids[:, :-1])
        loss = nn.functional.cross_entropy(
            logits.reshape(-1, logits.shape[-1]), ids[:, 1:].reshape(-1))
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()
        scheduler.step()
        if step % 200 == 0 or step == args.steps - 1:
            print(f"step {step:5d}  loss {loss.item():.3f}")

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    torch.save(model.state_dict(), out)
    print(f"saved {sum(p.numel() for p in model.parameters())} params -> {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
