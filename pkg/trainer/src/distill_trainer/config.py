"""Training configuration. Defaults mirror the reference setup: rank-16
adapters with scaling alpha 16 on the query/value/output projections, AdamW,
lr 1e-4, 50 epochs, batch size 64, up to 2048 newly generated tokens."""

from __future__ import annotations

from dataclasses import dataclass, field

VALID_PROJECTIONS = ("query", "key", "value", "output")


@dataclass
class AdamWSettings:
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    weight_decay: float = 0.0


@dataclass
class TrainConfig:
    base_model_id: str = "tiny-64"
    lora_rank: int = 16
    lora_alpha: int = 16
    target_projections: tuple[str, ...] = ("query", "value", "output")
    optimizer: AdamWSettings = field(default_factory=AdamWSettings)
    learning_rate: float = 1e-4
    epochs: int = 50
    batch_size: int = 64
    max_new_tokens: int = 2048
    seed: int = 0
    max_seq_len: int | None = None  # None: the base model's context length

    def validate(self) -> None:
        if self.lora_rank <= 0:
            raise ValueError("lora_rank must be > 0")
        if not self.target_projections:
            raise ValueError("target_projections must be nonempty")
        unknown = set(self.target_projections) - set(VALID_PROJECTIONS)
        if unknown:
            raise ValueError(f"unknown projections: {sorted(unknown)}")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.epochs <= 0 or self.batch_size <= 0:
            raise ValueError("epochs and batch_size must be > 0")
        if self.max_new_tokens <= 0:
            raise ValueError("max_new_tokens must be > 0")
