"""Multimodal rumor posts to retrieval-augmented instruction data.

Pipeline stages: visual digesting (OCR + caption), two-direction evidence
retrieval, byte-exact prompt rendering, teacher rationale elicitation with a
forced terminal-label sentence, instruction-dataset assembly, and an
evaluation harness (metrics, evidence sweeps, ablation comparisons).
"""

from .labels import (PARSE_FAILURE, LabelTable, canonicalize, default_table,
                     extract_fine_grained, extract_label, load_table,
                     normalize_fine_grained, terminal_sentence)
from .models import (ALL_LABELS, FineGrainedLabel, InstructionRecord, Post,
                     ProcessedInstance, RationaleRecord, StandardLabel,
                     TextualEvidence, ValidationReport, VisualDigest,
                     VisualEvidence, validate_post, validate_posts)
from .prompts import (RenderedPrompt, fine_grained_block,
                      render_inference_prompt, render_labeling_prompt)
from .evaluation import (EvalConfig, EvalItem, Metrics, compare_results,
                         compute_metrics, evaluate, evidence_count_sweep)
from .teacher import (BatchReport, TeacherConfig, append_label_suffix,
                      elicit_rationale, run_elicitation_batch)

__version__ = "0.1.0"
