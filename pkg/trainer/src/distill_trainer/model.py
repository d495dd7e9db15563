"""Tiny decoder-only causal LMs with separately named attention projections.

The registry maps base_model_id strings to architectures; weights come from a
committed snapshot when one exists for the id, otherwise from seeded random
init. Separate query/key/value/output projection modules keep the adapter
target names one-to-one with the attention roles.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from importlib import resources

import torch
from torch import nn

from .tokenizer import VOCAB_SIZE, ByteTokenizer


@dataclass(frozen=True)
class ModelSpec:
    dim: int
    n_layers: int
    n_heads: int
    max_seq_len: int
    vocab_size: int = VOCAB_SIZE


REGISTRY: dict[str, ModelSpec] = {
    "tiny-64": ModelSpec(dim=64, n_layers=2, n_heads=4, max_seq_len=256),
    "tiny-128": ModelSpec(dim=128, n_layers=2, n_heads=4, max_seq_len=384),
}

# ids with a committed pretrained snapshot under weights/
PRETRAINED = {"tiny-64": "tiny-64.pt"}


class SelfAttention(nn.Module):
    def __init__(self, dim: int, n_heads: int) -> None:
        super().__init__()
        self.n_heads = n_heads
        self.head_dim = dim // n_heads
        self.query_proj = nn.Linear(dim, dim)
        self.key_proj = nn.Linear(dim, dim)
        self.value_proj = nn.Linear(dim, dim)
        self.output_proj = nn.Linear(dim, dim)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        batch, seq, dim = x.shape
        shape = (batch, seq, self.n_heads, self.head_dim)
        q = self.query_proj(x).view(shape).transpose(1, 2)
        k = self.key_proj(x).view(shape).transpose(1, 2)
        v = self.value_proj(x).view(shape).transpose(1, 2)
        scores = q @ k.transpose(-2, -1) / math.sqrt(self.head_dim)
        mask = torch.triu(torch.ones(seq, seq, dtype=torch.bool, device=x.device), 1)
        scores = scores.masked_fill(mask, float("-inf"))
        out = torch.softmax(scores, dim=-1) @ v
        out = out.transpose(1, 2).reshape(batch, seq, dim)
        return self.output_proj(out)


class Block(nn.Module):
    def __init__(self, dim: int, n_heads: int) -> None:
        super().__init__()
        self.ln1 = nn.LayerNorm(dim)
        self.attn = SelfAttention(dim, n_heads)
        self.ln2 = nn.LayerNorm(dim)
        self.mlp = nn.Sequential(
            nn.Linear(dim, 4 * dim), nn.GELU(), nn.Linear(4 * dim, dim))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = x + self.attn(self.ln1(x))
        return x + self.mlp(self.ln2(x))


class TinyCausalLM(nn.Module):
    def __init__(self, spec: ModelSpec) -> None:
        super().__init__()
        self.spec = spec
        self.tok_embed = nn.Embedding(spec.vocab_size, spec.dim)
        self.pos_embed = nn.Embedding(spec.max_seq_len, spec.dim)
        self.blocks = nn.ModuleList(
            Block(spec.dim, spec.n_heads) for _ in range(spec.n_layers))
        self.ln_f = nn.LayerNorm(spec.dim)
        self.lm_head = nn.Linear(spec.dim, spec.vocab_size, bias=False)

    def forward(self, ids: torch.Tensor) -> torch.Tensor:
        seq = ids.shape[1]
        pos = torch.arange(seq, device=ids.device)
        x = self.tok_embed(ids) + self.pos_embed(pos)
        for block in self.blocks:
            x = block(x)
        return self.lm_head(self.ln_f(x))


def build_base_model(base_model_id: str, seed: int = 0) -> tuple[TinyCausalLM, ByteTokenizer]:
    """Instantiate a registry model; load its committed snapshot when one exists."""
    if base_model_id not in REGISTRY:
        raise KeyError(f"unknown base model: {base_model_id!r}; "
                       f"known: {sorted(REGISTRY)}")
    torch.manual_seed(seed)
    model = TinyCausalLM(REGISTRY[base_model_id])
    snapshot = PRETRAINED.get(base_model_id)
    if snapshot is not None:
        path = resources.files("distill_trainer.weights").joinpath(snapshot)
        with resources.as_file(path) as file_path:
            if file_path.is_file():
                state = torch.load(file_path, map_location="cpu", weights_only=True)
                model.load_state_dict(state)
    model.eval()
    return model, ByteTokenizer()


def base_parameter_checksum(model: nn.Module) -> str:
    """SHA-256 over all non-adapter parameters, in name order.

    Names are normalized across adapter wrapping (which nests a projection
    under ``.base``), so the checksum is comparable before and after
    injection, not just before and after training.
    """
    entries = []
    for name, param in model.named_parameters():
        if "lora_" in name:
            continue
        entries.append((name.replace(".base.", "."), param))
    digest = hashlib.sha256()
    for name, param in sorted(entries, key=lambda entry: entry[0]):
        digest.update(name.encode("utf-8"))
        digest.update(param.detach().cpu().numpy().tobytes())
    return digest.hexdigest()
