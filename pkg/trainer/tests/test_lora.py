from __future__ import annotations

import pytest
import torch

from distill_trainer.errors import IncompatibleAdapter
from distill_trainer.lora import (LoRALinear, adapter_parameter_count,
                                  adapter_parameters, inject_adapters,
                                  load_adapter, save_adapter)
from distill_trainer.model import (REGISTRY, build_base_model,
                                   base_parameter_checksum)

TARGETS = ("query", "value", "output")


def closed_form_count(base_model_id: str, rank: int, targets=TARGETS) -> int:
    """Independent count from layer shapes: rank * (in + out) per projection."""
    spec = REGISTRY[base_model_id]
    per_projection = rank * (spec.dim + spec.dim)
    return spec.n_layers * len(targets) * per_projection


def test_injection_wraps_every_targeted_projection():
    model, _ = build_base_model("tiny-64", seed=0)
    wrapped = inject_adapters(model, rank=16, alpha=16, targets=TARGETS)
    spec = REGISTRY["tiny-64"]
    assert len(wrapped) == spec.n_layers * len(TARGETS)
    assert all(name.endswith(("query_proj", "value_proj", "output_proj"))
               for name in wrapped)
    for block in model.blocks:
        assert isinstance(block.attn.query_proj, LoRALinear)
        assert isinstance(block.attn.value_proj, LoRALinear)
        assert isinstance(block.attn.output_proj, LoRALinear)
        assert not isinstance(block.attn.key_proj, LoRALinear)


def test_adapter_parameter_count_matches_closed_form():
    model, _ = build_base_model("tiny-64", seed=0)
    inject_adapters(model, rank=16, alpha=16, targets=TARGETS)
    assert adapter_parameter_count(model) == closed_form_count("tiny-64", 16)
    assert adapter_parameter_count(model) == 12288  # 2 layers * 3 * 16 * (64+64)


def test_only_adapter_parameters_are_trainable():
    model, _ = build_base_model("tiny-64", seed=0)
    inject_adapters(model, rank=8, alpha=16, targets=("query",))
    for name, param in model.named_parameters():
        assert param.requires_grad == ("lora_" in name), name


def test_zero_initialized_adapters_preserve_base_behavior():
    torch.manual_seed(3)
    ids = torch.randint(0, 255, (2, 17))
    base, _ = build_base_model("tiny-64", seed=0)
    with torch.no_grad():
        reference = base(ids)
    adapted, _ = build_base_model("tiny-64", seed=0)
    inject_adapters(adapted, rank=16, alpha=16, targets=TARGETS)
    with torch.no_grad():
        after = adapted(ids)
    assert torch.allclose(reference, after, atol=1e-6)


def test_checksum_ignores_adapters_but_sees_base_changes():
    model, _ = build_base_model("tiny-64", seed=0)
    before = base_parameter_checksum(model)
    inject_adapters(model, rank=4, alpha=4, targets=("value",))
    assert base_parameter_checksum(model) == before
    with torch.no_grad():
        model.tok_embed.weight[0, 0] += 1.0
    assert base_parameter_checksum(model) != before


def test_save_load_round_trip(tmp_path):
    model, _ = build_base_model("tiny-64", seed=0)
    inject_adapters(model, rank=16, alpha=16, targets=TARGETS)
    with torch.no_grad():
        for _, param in adapter_parameters(model):
            param.add_(0.01)
    save_adapter(model, tmp_path / "adapter", base_model_id="tiny-64",
                 rank=16, alpha=16, targets=TARGETS, seed=0)

    fresh, _ = build_base_model("tiny-64", seed=0)
    config = load_adapter(fresh, tmp_path / "adapter", "tiny-64")
    assert config["lora_rank"] == 16
    ours = dict(adapter_parameters(model))
    theirs = dict(adapter_parameters(fresh))
    assert set(ours) == set(theirs)
    for name in ours:
        assert torch.equal(ours[name], theirs[name])


def test_adapter_from_other_base_rejected(tmp_path):
    model, _ = build_base_model("tiny-64", seed=0)
    inject_adapters(model, rank=16, alpha=16, targets=TARGETS)
    save_adapter(model, tmp_path / "adapter", base_model_id="tiny-64",
                 rank=16, alpha=16, targets=TARGETS, seed=0)
    other, _ = build_base_model("tiny-128", seed=0)
    with pytest.raises(IncompatibleAdapter):
        load_adapter(other, tmp_path / "adapter", "tiny-128")


def test_unknown_base_model():
    with pytest.raises(KeyError):
        build_base_model("tiny-9000")
