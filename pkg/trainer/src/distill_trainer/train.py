"""Adapter training: AdamW over the LoRA parameters only, base frozen.

The frozen-base contract is checkable: base_parameter_checksum() is identical
before and after a run. Data order is deterministic under a fixed seed.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from pathlib import Path

import torch
from torch import nn

from .config import TrainConfig
from .data import Example
from .errors import DivergedLoss, OutOfMemory
from .lora import adapter_parameters, inject_adapters, save_adapter
from .model import TinyCausalLM, base_parameter_checksum, build_base_model
from .tokenizer import ByteTokenizer, PAD_ID


@dataclass
class TrainResult:
    adapter_dir: Path
    losses: list[tuple[int, float]]  # (step, loss)
    base_checksum_before: str
    base_checksum_after: str
    adapter_parameter_count: int


def _batch_tensors(batch: list[Example]) -> tuple[torch.Tensor, torch.Tensor]:
    width = max(len(ex.input_ids) for ex in batch)
    ids = torch.full((len(batch), width), PAD_ID, dtype=torch.long)
    mask = torch.zeros((len(batch), width), dtype=torch.float32)
    for row, ex in enumerate(batch):
        ids[row, : len(ex.input_ids)] = torch.tensor(ex.input_ids, dtype=torch.long)
        mask[row, : len(ex.loss_mask)] = torch.tensor(ex.loss_mask, dtype=torch.float32)
    return ids, mask


def masked_lm_loss(model: nn.Module, ids: torch.Tensor,
                   mask: torch.Tensor) -> torch.Tensor:
    """Cross-entropy over next-token predictions, restricted to the target
    segment (teacher forcing on the output only)."""
    logits = model(ids)[:, :-1]
    labels = ids[:, 1:]
    weights = mask[:, 1:]
    losses = nn.functional.cross_entropy(
        logits.reshape(-1, logits.shape[-1]), labels.reshape(-1), reduction="none")
    weights = weights.reshape(-1)
    return (losses * weights).sum() / weights.sum().clamp(min=1.0)


def train(config: TrainConfig, corpus: list[Example],
          out_dir: Path | str) -> TrainResult:
    """Fine-tune adapters over the corpus and save the artifact + loss curve."""
    config.validate()
    if not corpus:
        raise ValueError("corpus is empty")
    out_dir = Path(out_dir)

    model, _ = build_base_model(config.base_model_id, seed=config.seed)
    inject_adapters(model, config.lora_rank, config.lora_alpha,
                    config.target_projections)
    checksum_before = base_parameter_checksum(model)

    trainable = [p for _, p in adapter_parameters(model)]
    optimizer = torch.optim.AdamW(
        trainable, lr=config.learning_rate, betas=config.optimizer.betas,
        eps=config.optimizer.eps, weight_decay=config.optimizer.weight_decay)

    rng = random.Random(config.seed)
    order = list(range(len(corpus)))
    losses: list[tuple[int, float]] = []
    step = 0
    model.train()
    try:
        for _ in range(config.epochs):
            rng.shuffle(order)
            for start in range(0, len(order), config.batch_size):
                batch = [corpus[i] for i in order[start: start + config.batch_size]]
                ids, mask = _batch_tensors(batch)
                optimizer.zero_grad()
                loss = masked_lm_loss(model, ids, mask)
                if not math.isfinite(loss.item()):
                    raise DivergedLoss(f"loss became {loss.item()} at step {step}")
                loss.backward()
                optimizer.step()
                losses.append((step, loss.item()))
                step += 1
    except torch.cuda.OutOfMemoryError as exc:
        raise OutOfMemory(f"out of memory with config {config}") from exc
    except RuntimeError as exc:
        if "out of memory" in str(exc).lower():
            raise OutOfMemory(f"out of memory with config {config}") from exc
        raise
    model.eval()

    checksum_after = base_parameter_checksum(model)
    adapter_dir = save_adapter(model, out_dir, base_model_id=config.base_model_id,
                               rank=config.lora_rank, alpha=config.lora_alpha,
                               targets=config.target_projections, seed=config.seed)
    curve = out_dir / "loss_curve.tsv"
    with open(curve, "w", encoding="utf-8") as handle:
        handle.write("step\tloss\n")
        for s, value in losses:
            handle.write(f"{s}\t{value:.6f}\n")
    return TrainResult(
        adapter_dir=adapter_dir,
        losses=losses,
        base_checksum_before=checksum_before,
        base_checksum_after=checksum_after,
        adapter_parameter_count=sum(p.numel() for p in trainable),
    )


def greedy_generate(model: TinyCausalLM, tokenizer: ByteTokenizer, prompt: str,
                    max_new_tokens: int, boundary: str = "\n") -> str:
    """Greedy decoding of the continuation after the prompt boundary.

    The context window is anchored once: an overlong prompt is cropped from
    the left so the continuation grows at stable absolute positions, matching
    how truncated training examples were laid out.
    """
    window = model.spec.max_seq_len
    budget = max(1, min(max_new_tokens, window - 8))
    prompt_keep = max(window - budget, window // 2)  # never starve the prompt
    ids = [tokenizer.bos_id] + tokenizer.encode(prompt + boundary)
    if len(ids) > prompt_keep:
        ids = ids[-prompt_keep:]
    generated: list[int] = []
    model.eval()
    with torch.no_grad():
        for _ in range(max_new_tokens):
            if len(ids) >= window:
                break
            context = torch.tensor([ids], dtype=torch.long)
            logits = model(context)
            next_id = int(logits[0, -1].argmax())
            if next_id == tokenizer.eos_id:
                break
            generated.append(next_id)
            ids.append(next_id)
    return tokenizer.decode(generated)
