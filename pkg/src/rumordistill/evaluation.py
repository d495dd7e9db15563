"""Prediction scoring and evaluation runs: metrics, sweeps, and ablation
comparison tables.

A parse failure counts as incorrect for accuracy and as a prediction outside
every class for per-class scores; it is additionally reported as its own
rate, never silently dropped or defaulted.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace as dc_replace
from typing import Mapping, Sequence

from .clients import ModelClient, reset_client
from .errors import ClientUnavailable, EmptyInput, LengthMismatch
from .labels import PARSE_FAILURE, Prediction, extract_label
from .models import ALL_LABELS, ProcessedInstance, StandardLabel
from .prompts import render_inference_prompt
from .retrieval import RetrievalConfig, select_evidence

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int

    def to_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall,
                "f1": self.f1, "support": self.support}


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    per_class: Mapping[StandardLabel, ClassMetrics]
    parse_failure_rate: float
    n: int

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "per_class": {label.surface: cm.to_dict()
                          for label, cm in self.per_class.items()},
            "parse_failure_rate": self.parse_failure_rate,
            "n": self.n,
        }


def compute_metrics(golds: Sequence[StandardLabel],
                    preds: Sequence[Prediction]) -> Metrics:
    """Accuracy plus macro precision/recall/F1 over classes with gold support.

    Macro F1 is the unweighted mean of per-class F1 values (not the harmonic
    mean of macro precision and recall).
    """
    if len(golds) != len(preds):
        raise LengthMismatch(f"{len(golds)} golds vs {len(preds)} preds")
    if not golds:
        raise EmptyInput("cannot score an empty prediction set")

    tp = {label: 0 for label in ALL_LABELS}
    fp = {label: 0 for label in ALL_LABELS}
    support = {label: 0 for label in ALL_LABELS}
    correct = 0
    failures = 0
    for gold, pred in zip(golds, preds):
        support[gold] += 1
        if pred is PARSE_FAILURE:
            failures += 1
            continue
        if pred == gold:
            tp[gold] += 1
            correct += 1
        else:
            fp[pred] += 1

    per_class: dict[StandardLabel, ClassMetrics] = {}
    for label in ALL_LABELS:
        predicted = tp[label] + fp[label]
        precision = tp[label] / predicted if predicted else 0.0
        recall = tp[label] / support[label] if support[label] else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[label] = ClassMetrics(precision=precision, recall=recall,
                                        f1=f1, support=support[label])

    present = [label for label in ALL_LABELS if support[label] > 0]
    macro_p = sum(per_class[l].precision for l in present) / len(present)
    macro_r = sum(per_class[l].recall for l in present) / len(present)
    macro_f1 = sum(per_class[l].f1 for l in present) / len(present)

    n = len(golds)
    return Metrics(accuracy=correct / n, precision=macro_p, recall=macro_r,
                   f1=macro_f1, per_class=per_class,
                   parse_failure_rate=failures / n, n=n)


@dataclass(frozen=True)
class EvalItem:
    """One test post: its processed instance, gold label, and image reference."""

    instance: ProcessedInstance
    gold: StandardLabel
    image: str | None = None


@dataclass
class EvalConfig:
    max_textual: int | None = None   # None keeps the stored evidence as-is
    max_visual: int | None = None
    ablation: str = "full"           # no_evidence_no_rationale forces caps to 0
    max_item_chars: int = 500
    include_image: bool = True

    def caps(self) -> tuple[int | None, int | None]:
        if self.ablation == "no_evidence_no_rationale":
            return 0, 0
        return self.max_textual, self.max_visual


def _capped_instance(item: EvalItem, config: EvalConfig) -> ProcessedInstance:
    max_t, max_v = config.caps()
    if max_t is None and max_v is None:
        return item.instance
    cap_cfg = RetrievalConfig(
        max_textual=max_t if max_t is not None else len(item.instance.textual_evidence),
        max_visual=max_v if max_v is not None else len(item.instance.visual_evidence),
        max_item_chars=config.max_item_chars,
    )
    bundle = select_evidence(item.instance.textual_evidence,
                             item.instance.visual_evidence, cap_cfg)
    return dc_replace(item.instance, textual_evidence=bundle.textual,
                      visual_evidence=bundle.visual)


def evaluate(client: ModelClient, items: Sequence[EvalItem],
             config: EvalConfig | None = None) -> tuple[Metrics, list[dict]]:
    """Query the client on every item and score the extracted labels.

    Per-item model failures are logged and scored as parse failures; only an
    unreachable client aborts the run.
    """
    if not items:
        raise EmptyInput("no eval items")
    config = config or EvalConfig()
    reset_client(client)

    golds: list[StandardLabel] = []
    preds: list[Prediction] = []
    rows: list[dict] = []
    for item in items:
        instance = _capped_instance(item, config)
        prompt = render_inference_prompt(instance)
        image = item.image if config.include_image else None
        try:
            raw = client.complete(prompt.text, image)
            pred = extract_label(raw)
        except ClientUnavailable:
            raise
        except Exception as exc:
            log.warning("model call failed for %s: %s", item.instance.post_id, exc)
            raw = ""
            pred = PARSE_FAILURE
        golds.append(item.gold)
        preds.append(pred)
        rows.append({
            "post_id": item.instance.post_id,
            "prompt_fingerprint": prompt.fingerprint,
            "raw_output": raw,
            "extracted": None if pred is PARSE_FAILURE else pred.surface,
            "gold": item.gold.surface,
            "correct": pred == item.gold,
        })
    return compute_metrics(golds, preds), rows


def evidence_count_sweep(client: ModelClient, items: Sequence[EvalItem],
                         textual_grid: Sequence[int], visual_grid: Sequence[int],
                         config: EvalConfig | None = None) -> list[dict]:
    """One evaluate run per (textual, visual) cap pair; accuracy per point."""
    if not textual_grid or not visual_grid:
        raise EmptyInput("sweep grids must be nonempty")
    base = config or EvalConfig()
    rows: list[dict] = []
    for m in textual_grid:
        for n in visual_grid:
            point = EvalConfig(max_textual=m, max_visual=n, ablation=base.ablation,
                               max_item_chars=base.max_item_chars,
                               include_image=base.include_image)
            metrics, _ = evaluate(client, items, point)
            rows.append({"textual": m, "visual": n, "total": m + n,
                         "accuracy": metrics.accuracy, "f1": metrics.f1})
    return rows


_COMPARE_COLUMNS = ("accuracy", "precision", "recall", "f1")


def compare_results(named: Sequence[tuple[str, Metrics]]) -> dict:
    """Aligned comparison of result sets, flagging best and second per column.

    Ties break toward the earlier row, deterministically.
    """
    if len(named) < 2:
        raise EmptyInput("need at least two result sets to compare")
    flags: dict[str, dict[str, str]] = {name: {} for name, _ in named}
    for column in _COMPARE_COLUMNS:
        order = sorted(range(len(named)),
                       key=lambda i: (-getattr(named[i][1], column), i))
        flags[named[order[0]][0]][column] = "best"
        flags[named[order[1]][0]][column] = "second"
    return {
        "columns": list(_COMPARE_COLUMNS),
        "rows": [
            {"name": name,
             "values": {c: getattr(metrics, c) for c in _COMPARE_COLUMNS},
             "flags": flags[name]}
            for name, metrics in named
        ],
    }


def format_metrics_table(metrics: Metrics) -> str:
    lines = [
        f"n                  {metrics.n}",
        f"accuracy           {metrics.accuracy:.4f}",
        f"precision (macro)  {metrics.precision:.4f}",
        f"recall (macro)     {metrics.recall:.4f}",
        f"f1 (macro)         {metrics.f1:.4f}",
        f"parse failures     {metrics.parse_failure_rate:.4f}",
        "",
        "class        precision  recall   f1       support",
    ]
    for label, cm in metrics.per_class.items():
        lines.append(f"{label.surface:<12} {cm.precision:<10.4f} {cm.recall:<8.4f} "
                     f"{cm.f1:<8.4f} {cm.support}")
    return "\n".join(lines)


def format_comparison_table(comparison: dict) -> str:
    """Text table; best value per column marked with ** and second with *."""
    columns = comparison["columns"]
    name_width = max(len(row["name"]) for row in comparison["rows"])
    name_width = max(name_width, len("model"))
    header = "model".ljust(name_width) + "  " + "  ".join(c.ljust(12) for c in columns)
    lines = [header]
    for row in comparison["rows"]:
        cells = []
        for column in columns:
            value = f"{row['values'][column]:.4f}"
            flag = row["flags"].get(column)
            if flag == "best":
                value = f"**{value}**"
            elif flag == "second":
                value = f"*{value}*"
            cells.append(value.ljust(12))
        lines.append(row["name"].ljust(name_width) + "  " + "  ".join(cells))
    return "\n".join(lines)
