"""LoRA fine-tuning of a student causal LM on instruction records, plus a
local completion server implementing the evaluation model-client contract."""

from .config import AdamWSettings, TrainConfig
from .data import Example, build_training_corpus, encode_example
from .lora import (LoRALinear, adapter_parameter_count, inject_adapters,
                   load_adapter, save_adapter)
from .model import REGISTRY, TinyCausalLM, base_parameter_checksum, build_base_model
from .serve import StudentServer, serve_student
from .tokenizer import ByteTokenizer
from .train import TrainResult, greedy_generate, masked_lm_loss, train

__version__ = "0.1.0"
