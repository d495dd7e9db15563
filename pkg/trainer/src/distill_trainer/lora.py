"""Low-rank adapters: frozen base linears plus trainable rank decompositions.

Only the lora_a / lora_b parameters ever receive gradients; everything else
is frozen at injection time. The zero-initialized B matrix makes an injected
model behave exactly like its base until training starts.
"""

from __future__ import annotations

import json
from pathlib import Path

import torch
from torch import nn

from .errors import IncompatibleAdapter

_TARGET_ATTRS = {
    "query": "query_proj",
    "key": "key_proj",
    "value": "value_proj",
    "output": "output_proj",
}


class LoRALinear(nn.Module):
    def __init__(self, base: nn.Linear, rank: int, alpha: int) -> None:
        super().__init__()
        self.base = base
        self.rank = rank
        self.alpha = alpha
        self.scaling = alpha / rank
        self.lora_a = nn.Parameter(torch.empty(rank, base.in_features))
        self.lora_b = nn.Parameter(torch.zeros(base.out_features, rank))
        nn.init.normal_(self.lora_a, std=0.02)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.base(x) + self.scaling * (x @ self.lora_a.T @ self.lora_b.T)


def inject_adapters(model: nn.Module, rank: int, alpha: int,
                    targets: tuple[str, ...]) -> list[str]:
    """Wrap the targeted attention projections; freeze every base parameter.

    Returns the qualified names of the wrapped modules.
    """
    attrs = {_TARGET_ATTRS[t] for t in targets}
    wrapped: list[str] = []
    for name, module in model.named_modules():
        for attr in attrs:
            child = getattr(module, attr, None)
            if isinstance(child, nn.Linear):
                setattr(module, attr, LoRALinear(child, rank, alpha))
                wrapped.append(f"{name}.{attr}" if name else attr)
    if not wrapped:
        raise ValueError(f"no projections matched targets {targets}")
    for name, param in model.named_parameters():
        param.requires_grad = "lora_" in name
    return wrapped


def adapter_parameters(model: nn.Module) -> list[tuple[str, nn.Parameter]]:
    return [(name, p) for name, p in model.named_parameters() if "lora_" in name]


def adapter_parameter_count(model: nn.Module) -> int:
    return sum(p.numel() for _, p in adapter_parameters(model))


def save_adapter(model: nn.Module, out_dir: Path | str, *, base_model_id: str,
                 rank: int, alpha: int, targets: tuple[str, ...], seed: int) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    state = {name: p.detach().cpu() for name, p in adapter_parameters(model)}
    torch.save(state, out_dir / "adapter.pt")
    (out_dir / "adapter_config.json").write_text(json.dumps({
        "base_model_id": base_model_id,
        "lora_rank": rank,
        "lora_alpha": alpha,
        "target_projections": list(targets),
        "seed": seed,
    }, indent=2) + "\n", encoding="utf-8")
    return out_dir


def load_adapter(model: nn.Module, adapter_dir: Path | str,
                 expected_base_model_id: str) -> dict:
    """Inject adapters per the saved config and load their weights."""
    adapter_dir = Path(adapter_dir)
    config = json.loads((adapter_dir / "adapter_config.json").read_text(encoding="utf-8"))
    if config["base_model_id"] != expected_base_model_id:
        raise IncompatibleAdapter(
            f"adapter was trained on {config['base_model_id']!r}, "
            f"not {expected_base_model_id!r}")
    inject_adapters(model, config["lora_rank"], config["lora_alpha"],
                    tuple(config["target_projections"]))
    state = torch.load(adapter_dir / "adapter.pt", map_location="cpu", weights_only=True)
    own = dict(adapter_parameters(model))
    if set(state) != set(own):
        raise IncompatibleAdapter("adapter parameter names do not match the base")
    for name, tensor in state.items():
        if own[name].shape != tensor.shape:
            raise IncompatibleAdapter(
                f"shape mismatch for {name}: {tuple(tensor.shape)} vs "
                f"{tuple(own[name].shape)}")
        with torch.no_grad():
            own[name].copy_(tensor)
    return config
