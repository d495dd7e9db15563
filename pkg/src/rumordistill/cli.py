"""Command-line pipeline driver.

Workspace layout (all paths relative to --workspace):

    posts/posts.jsonl      input posts
    cache/                 shared response cache
    instances/             digests and processed instances
    rationales/            teacher outputs + quarantine + report
    dataset/               instruction records and splits
    results/               metrics, logs, sweep/histogram tables, plots

One key-value config file drives every stage; dedicated flags override config
keys, which override built-in defaults. Exit codes: 0 ok, 2 missing input,
3 invalid config, 4 budget exhausted.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import dataset as ds
from .cache import FileCache
from .clients import (ChatCompletionClient, ConstantClient, EchoClient,
                      StudentServerClient)
from .errors import ConfigError, PipelineError
from .evaluation import (EvalConfig, EvalItem, compare_results,
                         evidence_count_sweep, evaluate,
                         format_comparison_table, format_metrics_table, Metrics,
                         ClassMetrics, compute_metrics)
from .models import Post, StandardLabel, ProcessedInstance, validate_posts
from .retrieval import (EngineSettings, RetrievalConfig, RetryPolicy,
                        retrieve_for_post)
from .teacher import TeacherConfig, run_elicitation_batch, write_report
from .util import TokenBucket, read_jsonl, write_jsonl
from .visual import BackendSettings, VisualBackendConfig, process_visual

EXIT_OK = 0
EXIT_MISSING_INPUT = 2
EXIT_CONFIG_INVALID = 3
EXIT_BUDGET_EXHAUSTED = 4


# -- config handling ---------------------------------------------------------

def read_config(path: Path) -> dict[str, str]:
    cfg: dict[str, str] = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"malformed config line: {line!r}")
        cfg[key.strip()] = value.strip()
    return cfg


def resolve(cfg: dict[str, str], key: str, flag=None, default=None):
    """Precedence per key: CLI flag > config file > built-in default."""
    if flag is not None:
        return flag
    if key in cfg:
        return cfg[key]
    return default


def _to_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    return str(value).strip().lower() in ("1", "true", "yes", "on")


class Workspace:
    def __init__(self, root: Path, cfg: dict[str, str]) -> None:
        self.root = root
        self.cfg = cfg

    def path(self, rel: str) -> Path:
        return self.root / rel

    def cfg_path(self, key: str, flag=None, default=None) -> Path | None:
        value = resolve(self.cfg, key, flag, default)
        if value is None:
            return None
        value = Path(value)
        return value if value.is_absolute() else self.root / value


def _load_workspace(args) -> Workspace:
    root = Path(args.workspace).resolve()
    cfg_path = Path(args.config) if args.config else root / "workspace.cfg"
    if not cfg_path.is_absolute():
        cfg_path = root / cfg_path
    cfg = read_config(cfg_path) if cfg_path.is_file() else {}
    for item in args.set or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        cfg[key.strip()] = value.strip()
    return Workspace(root, cfg)


def _require(path: Path, what: str) -> Path:
    if not path.is_file():
        print(f"error: missing {what}: {path}", file=sys.stderr)
        raise SystemExit(EXIT_MISSING_INPUT)
    return path


# -- config builders ---------------------------------------------------------

def _backend_settings(ws: Workspace, prefix: str) -> BackendSettings:
    kind = resolve(ws.cfg, f"{prefix}.backend", default="mock")
    command = resolve(ws.cfg, f"{prefix}.command")
    return BackendSettings(
        kind=kind,
        command=tuple(command.split()) if command else None,
        endpoint=resolve(ws.cfg, f"{prefix}.endpoint"),
        fixture_path=ws.cfg_path(f"{prefix}.fixture"),
    )


def build_visual_config(ws: Workspace, cache: FileCache) -> VisualBackendConfig:
    cfg = VisualBackendConfig(
        ocr=_backend_settings(ws, "visual.ocr"),
        caption=_backend_settings(ws, "visual.caption"),
        timeout=float(resolve(ws.cfg, "visual.timeout", default=30.0)),
        cache=cache,
    )
    cfg.validate()
    return cfg


def build_retrieval_config(ws: Workspace, cache: FileCache,
                           limiter: TokenBucket | None) -> RetrievalConfig:
    engine_kind = resolve(ws.cfg, "retrieval.engine", default="mock")
    fixture = ws.cfg_path("retrieval.fixture")
    base = fixture.parent.parent if fixture is not None else ws.root

    def engine(endpoint_key: str) -> EngineSettings:
        return EngineSettings(
            kind=engine_kind,
            fixture_path=fixture,
            endpoint=resolve(ws.cfg, endpoint_key),
            base_dir=base,
        )

    cfg = RetrievalConfig(
        max_textual=int(resolve(ws.cfg, "retrieval.max_textual", default=3)),
        max_visual=int(resolve(ws.cfg, "retrieval.max_visual", default=3)),
        reverse_image=engine("retrieval.reverse_image_endpoint"),
        text_search=engine("retrieval.text_search_endpoint"),
        cache=cache,
        retry=RetryPolicy(
            max_attempts=int(resolve(ws.cfg, "retrieval.retry.max_attempts", default=3)),
            base_backoff=float(resolve(ws.cfg, "retrieval.retry.base_backoff", default=0.5)),
        ),
        offline_mode=_to_bool(resolve(ws.cfg, "retrieval.offline", default=False)),
        max_item_chars=int(resolve(ws.cfg, "retrieval.max_item_chars", default=500)),
        rate_limiter=limiter,
    )
    cfg.validate()
    return cfg


def build_teacher_config(ws: Workspace, cache: FileCache, budget=None,
                         limiter: TokenBucket | None = None) -> TeacherConfig:
    budget_value = resolve(ws.cfg, "teacher.budget", budget)
    cfg = TeacherConfig(
        backend=resolve(ws.cfg, "teacher.backend", default="mock"),
        endpoint=resolve(ws.cfg, "teacher.endpoint"),
        model_id=resolve(ws.cfg, "teacher.model_id", default="mock-teacher"),
        temperature=float(resolve(ws.cfg, "teacher.temperature", default=0.0)),
        max_output_tokens=int(resolve(ws.cfg, "teacher.max_output_tokens", default=512)),
        cost_budget=int(budget_value) if budget_value is not None else None,
        cache=cache,
        rate_limiter=limiter,
    )
    mock_text = resolve(ws.cfg, "teacher.mock_text")
    if mock_text:
        cfg.mock_text = mock_text
    cfg.validate()
    return cfg


def _rate_limiter(ws: Workspace) -> TokenBucket | None:
    rate = resolve(ws.cfg, "rate_limit.requests_per_second")
    return TokenBucket(float(rate)) if rate else None


def _shared_cache(ws: Workspace) -> FileCache:
    return FileCache(ws.path("cache"))


# -- data loading ------------------------------------------------------------

def load_posts(ws: Workspace) -> list[Post]:
    path = _require(ws.path("posts/posts.jsonl"), "posts file")
    posts = [Post.from_dict(row) for row in read_jsonl(path)]
    for report in validate_posts(posts, image_base=ws.root):
        if not report.valid:
            print(f"warning: post {report.post_id}: {'; '.join(report.problems)}",
                  file=sys.stderr)
    return posts


def load_instances(ws: Workspace) -> dict[str, ProcessedInstance]:
    path = _require(ws.path("instances/instances.jsonl"), "instances file")
    return {row["post_id"]: ProcessedInstance.from_dict(row) for row in read_jsonl(path)}


def _resolve_image(ws: Workspace, image: str) -> str:
    path = Path(image)
    return str(path if path.is_absolute() else ws.root / path)


# -- subcommands --------------------------------------------------------------

def cmd_augment(args) -> int:
    ws = _load_workspace(args)
    posts = load_posts(ws)
    visual_cfg = build_visual_config(ws, _shared_cache(ws))
    rows = []
    failed = 0
    for post in posts:
        try:
            digest = process_visual(_resolve_image(ws, post.image), visual_cfg)
        except PipelineError as exc:
            failed += 1
            print(f"warning: digest failed for {post.id}: {exc}", file=sys.stderr)
            continue
        rows.append({"post_id": post.id, **digest.to_dict()})
    write_jsonl(ws.path("instances/digests.jsonl"), rows)
    report = dict(visual_cfg.counters)
    report["digest_failures"] = failed
    _write_json(ws.path("instances/augment_report.json"), report)
    print(f"augmented {len(rows)} posts "
          f"({visual_cfg.counters['ocr_backend_calls'] + visual_cfg.counters['caption_backend_calls']} backend calls)")
    return EXIT_OK


def cmd_retrieve(args) -> int:
    ws = _load_workspace(args)
    posts = load_posts(ws)
    digests_path = _require(ws.path("instances/digests.jsonl"), "digests file (run augment)")
    digests = {row["post_id"]: row for row in read_jsonl(digests_path)}
    cache = _shared_cache(ws)
    limiter = _rate_limiter(ws)
    retrieval_cfg = build_retrieval_config(ws, cache, limiter)
    visual_cfg = build_visual_config(ws, cache)

    from .models import VisualDigest
    rows = []
    for post in posts:
        row = digests.get(post.id)
        if row is None:
            print(f"warning: no digest for {post.id}; skipping", file=sys.stderr)
            continue
        digest = VisualDigest(ocr_text=row["ocr_text"], caption_text=row["caption_text"])
        instance = retrieve_for_post(post.id, post.text, _resolve_image(ws, post.image),
                                     digest, retrieval_cfg, visual_cfg)
        rows.append(instance.to_dict())
    write_jsonl(ws.path("instances/instances.jsonl"), rows)
    report = dict(retrieval_cfg.counters)
    report.update({f"visual_{k}": v for k, v in visual_cfg.counters.items()})
    _write_json(ws.path("instances/retrieve_report.json"), report)
    print(f"retrieved evidence for {len(rows)} posts "
          f"({retrieval_cfg.counters['engine_requests']} engine requests)")
    return EXIT_OK


def cmd_elicit(args) -> int:
    ws = _load_workspace(args)
    posts = {p.id: p for p in load_posts(ws)}
    instances = load_instances(ws)
    cache = _shared_cache(ws)
    teacher_cfg = build_teacher_config(ws, cache, budget=args.budget,
                                       limiter=_rate_limiter(ws))
    items = [(instance, posts[post_id].gold_label)
             for post_id, instance in instances.items() if post_id in posts]
    report = run_elicitation_batch(items, teacher_cfg,
                                   ws.path("rationales/rationales.jsonl"),
                                   ws.path("rationales/quarantine.jsonl"),
                                   resume=not args.fresh)
    write_report(ws.path("rationales/elicit_report.json"), report)
    print(f"elicited: {report.succeeded} ok, {report.failed} failed, "
          f"{report.quarantined} quarantined, {report.skipped} skipped, "
          f"{report.requests_spent} requests")
    if report.budget_exhausted:
        print("error: request budget exhausted", file=sys.stderr)
        return EXIT_BUDGET_EXHAUSTED
    return EXIT_OK


def cmd_assemble(args) -> int:
    ws = _load_workspace(args)
    posts = {p.id: p for p in load_posts(ws)}
    instances = load_instances(ws)
    rationales_path = _require(ws.path("rationales/rationales.jsonl"),
                               "rationales file (run elicit)")
    from .teacher import load_rationales
    rationales = load_rationales(rationales_path)

    records = []
    for rationale in rationales:
        instance = instances.get(rationale.post_id)
        post = posts.get(rationale.post_id)
        if instance is None or post is None:
            print(f"warning: no instance/post for rationale {rationale.post_id}",
                  file=sys.stderr)
            continue
        records.append(ds.assemble_record(instance, rationale,
                                          include_image=args.include_image,
                                          image=post.image))
    ablation = resolve(ws.cfg, "assemble.ablation", args.ablation, ds.ABLATION_FULL)
    records = list(ds.apply_ablation(records, ablation, instances))
    ds.write_records(ws.path("dataset/records.jsonl"), records)
    print(f"assembled {len(records)} records (ablation: {ablation})")
    return EXIT_OK


def cmd_split(args) -> int:
    ws = _load_workspace(args)
    records_path = _require(ws.path("dataset/records.jsonl"), "records file (run assemble)")
    records = ds.read_records(records_path)
    assignments = None
    if args.assignments:
        assignments = json.loads(Path(args.assignments).read_text(encoding="utf-8"))
    fraction = float(resolve(ws.cfg, "split.test_fraction", args.test_fraction, 0.2))
    seed = int(resolve(ws.cfg, "split.seed", args.seed, 7))
    train, test = ds.split_dataset(records, fraction, seed, assignments)
    ds.write_records(ws.path("dataset/train.jsonl"), train)
    ds.write_records(ws.path("dataset/test.jsonl"), test)
    print(f"split {len(records)} records into {len(train)} train / {len(test)} test")
    return EXIT_OK


def cmd_stats(args) -> int:
    ws = _load_workspace(args)
    records = _load_split_records(ws)
    stats = ds.dataset_stats(records)
    table = ds.format_stats_table(stats)
    print(table)
    results = ws.path("results")
    results.mkdir(parents=True, exist_ok=True)
    (results / "stats.txt").write_text(table + "\n", encoding="utf-8")
    _write_json(results / "stats.json", stats)

    instances_path = ws.path("instances/instances.jsonl")
    if instances_path.is_file():
        instances = {row["post_id"]: ProcessedInstance.from_dict(row)
                     for row in read_jsonl(instances_path)}
        known = [r for r in records if r.post_id in instances]
        rows = ds.length_histogram(known, instances, unit=args.unit,
                                   bucket_width=args.bucket_width)
        ds.write_histogram_table(results / "length_histogram.tsv", rows)
    else:
        print("note: no instances file; skipping length histogram", file=sys.stderr)
    return EXIT_OK


def _load_split_records(ws: Workspace):
    train_path = ws.path("dataset/train.jsonl")
    test_path = ws.path("dataset/test.jsonl")
    if train_path.is_file() or test_path.is_file():
        records = []
        if train_path.is_file():
            records.extend(ds.read_records(train_path))
        if test_path.is_file():
            records.extend(ds.read_records(test_path))
        return records
    records_path = _require(ws.path("dataset/records.jsonl"),
                            "dataset records (run assemble/split)")
    return ds.read_records(records_path)


def _build_client(ws: Workspace, args):
    spec = resolve(ws.cfg, "eval.client", getattr(args, "client", None), "echo")
    if spec == "echo":
        return "echo"  # constructed later, once gold order is known
    if spec.startswith("constant"):
        _, _, surface = spec.partition(":")
        return ConstantClient(StandardLabel.from_surface(surface or "rumor"))
    if spec == "chat":
        endpoint = resolve(ws.cfg, "eval.endpoint", getattr(args, "endpoint", None))
        if not endpoint:
            raise ConfigError("eval.client=chat requires eval.endpoint")
        return ChatCompletionClient(endpoint,
                                    model_id=resolve(ws.cfg, "eval.model_id", default="student"))
    if spec == "student":
        endpoint = resolve(ws.cfg, "eval.endpoint", getattr(args, "endpoint", None))
        if not endpoint:
            raise ConfigError("eval.client=student requires eval.endpoint")
        return StudentServerClient(endpoint)
    raise ConfigError(f"unknown eval client: {spec!r}")


def _eval_items(ws: Workspace, split: str) -> list[EvalItem]:
    posts = {p.id: p for p in load_posts(ws)}
    instances = load_instances(ws)
    ids = list(instances)
    if split in ("train", "test"):
        split_path = ws.path(f"dataset/{split}.jsonl")
        if split_path.is_file():
            wanted = {r.post_id for r in ds.read_records(split_path)}
            ids = [i for i in ids if i in wanted]
        elif split == "test":
            print("note: no dataset/test.jsonl; evaluating all instances",
                  file=sys.stderr)
    items = []
    for post_id in ids:
        post = posts.get(post_id)
        if post is None:
            continue
        items.append(EvalItem(instance=instances[post_id], gold=post.gold_label,
                              image=_resolve_image(ws, post.image)))
    return items


def _eval_config(ws: Workspace, args) -> EvalConfig:
    max_textual = resolve(ws.cfg, "eval.max_textual", args.max_textual)
    max_visual = resolve(ws.cfg, "eval.max_visual", args.max_visual)
    return EvalConfig(
        max_textual=int(max_textual) if max_textual is not None else None,
        max_visual=int(max_visual) if max_visual is not None else None,
        ablation=resolve(ws.cfg, "eval.ablation", args.ablation, "full"),
        include_image=not args.no_image,
    )


def cmd_eval(args) -> int:
    ws = _load_workspace(args)
    items = _eval_items(ws, args.split)
    if not items:
        print("error: no eval items", file=sys.stderr)
        return EXIT_MISSING_INPUT
    client = _build_client(ws, args)
    if client == "echo":
        client = EchoClient([item.gold for item in items])
    metrics, log_rows = evaluate(client, items, _eval_config(ws, args))
    results = ws.path("results")
    results.mkdir(parents=True, exist_ok=True)
    _write_json(results / "metrics.json", metrics.to_dict())
    table = format_metrics_table(metrics)
    (results / "metrics.txt").write_text(table + "\n", encoding="utf-8")
    write_jsonl(results / "eval_log.jsonl", log_rows)
    print(table)
    return EXIT_OK


def cmd_sweep(args) -> int:
    ws = _load_workspace(args)
    items = _eval_items(ws, args.split)
    if not items:
        print("error: no eval items", file=sys.stderr)
        return EXIT_MISSING_INPUT
    client = _build_client(ws, args)
    if client == "echo":
        client = EchoClient([item.gold for item in items])
    rows = evidence_count_sweep(client, items, _parse_grid(args.textual_grid),
                                _parse_grid(args.visual_grid), _eval_config(ws, args))
    results = ws.path("results")
    results.mkdir(parents=True, exist_ok=True)
    out = results / "sweep.tsv"
    with open(out, "w", encoding="utf-8") as handle:
        handle.write("textual\tvisual\ttotal\taccuracy\tf1\n")
        for row in rows:
            handle.write(f"{row['textual']}\t{row['visual']}\t{row['total']}\t"
                         f"{row['accuracy']:.6f}\t{row['f1']:.6f}\n")
    print(f"swept {len(rows)} grid points -> {out}")
    return EXIT_OK


def _parse_grid(spec: str) -> list[int]:
    spec = spec.strip()
    for sep in ("..", "-"):
        if sep in spec and "," not in spec:
            lo, _, hi = spec.partition(sep)
            return list(range(int(lo), int(hi) + 1))
    return [int(part) for part in spec.split(",") if part.strip()]


def _metrics_from_dict(d: dict) -> Metrics:
    per_class = {StandardLabel.from_surface(surface): ClassMetrics(**cm)
                 for surface, cm in d.get("per_class", {}).items()}
    return Metrics(accuracy=d["accuracy"], precision=d["precision"],
                   recall=d["recall"], f1=d["f1"], per_class=per_class,
                   parse_failure_rate=d.get("parse_failure_rate", 0.0), n=d["n"])


def cmd_compare(args) -> int:
    ws = _load_workspace(args)
    named = []
    for path in args.results:
        path = Path(path)
        data = json.loads(_require(path, "metrics file").read_text(encoding="utf-8"))
        named.append((path.stem if path.stem != "metrics" else path.parent.name,
                      _metrics_from_dict(data)))
    comparison = compare_results(named)
    table = format_comparison_table(comparison)
    print(table)
    results = ws.path("results")
    results.mkdir(parents=True, exist_ok=True)
    (results / "comparison.txt").write_text(table + "\n", encoding="utf-8")
    _write_json(results / "comparison.json", comparison)
    return EXIT_OK


def cmd_plot(args) -> int:
    ws = _load_workspace(args)
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    made = []
    if args.sweep:
        rows = _read_table(Path(args.sweep))
        fig, ax = plt.subplots(figsize=(6, 4))
        by_visual: dict[str, list[tuple[int, float]]] = {}
        for row in rows:
            by_visual.setdefault(row["visual"], []).append(
                (int(row["textual"]), float(row["accuracy"])))
        for visual, points in sorted(by_visual.items()):
            points.sort()
            ax.plot([p[0] for p in points], [p[1] for p in points],
                    marker="o", label=f"visual={visual}")
        ax.set_xlabel("textual evidence count")
        ax.set_ylabel("accuracy")
        ax.legend()
        out = ws.path("results/sweep.png")
        out.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out, dpi=120, bbox_inches="tight")
        plt.close(fig)
        made.append(out)
    if args.histogram:
        rows = _read_table(Path(args.histogram))
        fig, ax = plt.subplots(figsize=(6, 4))
        by_group: dict[str, list[tuple[int, int]]] = {}
        for row in rows:
            key = f"m={row['m']},n={row['n']}"
            by_group.setdefault(key, []).append(
                (int(row["bucket_start"]), int(row["count"])))
        for key, points in sorted(by_group.items()):
            points.sort()
            ax.plot([p[0] for p in points], [p[1] for p in points],
                    drawstyle="steps-post", label=key)
        ax.set_xlabel("rendered length bucket")
        ax.set_ylabel("records")
        ax.legend(fontsize=7)
        out = ws.path("results/length_histogram.png")
        out.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out, dpi=120, bbox_inches="tight")
        plt.close(fig)
        made.append(out)
    if not made:
        print("error: nothing to plot; pass --sweep and/or --histogram",
              file=sys.stderr)
        return EXIT_MISSING_INPUT
    for path in made:
        print(f"wrote {path}")
    return EXIT_OK


def _read_table(path: Path) -> list[dict]:
    lines = _require(path, "table file").read_text(encoding="utf-8").splitlines()
    header = lines[0].split("\t")
    return [dict(zip(header, line.split("\t"))) for line in lines[1:] if line]


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, ensure_ascii=False, indent=2) + "\n",
                    encoding="utf-8")


# -- entry point ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rumordistill",
                                     description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--workspace", default=".", help="workspace directory")
    parser.add_argument("--config", default=None,
                        help="config file (default: <workspace>/workspace.cfg)")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config key")

    # the same options are accepted after the subcommand name
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--workspace", default=argparse.SUPPRESS)
    common.add_argument("--config", default=argparse.SUPPRESS)
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        default=argparse.SUPPRESS)

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("augment", parents=[common], help="OCR + caption every post image")
    p.set_defaults(fn=cmd_augment)
    p = sub.add_parser("retrieve", parents=[common], help="retrieve and digest evidence")
    p.set_defaults(fn=cmd_retrieve)

    p = sub.add_parser("elicit", parents=[common], help="query the teacher for rationales")
    p.add_argument("--budget", type=int, default=None, help="request budget cap")
    p.add_argument("--fresh", action="store_true", help="ignore previously persisted records")
    p.set_defaults(fn=cmd_elicit)

    p = sub.add_parser("assemble", parents=[common], help="build instruction records")
    p.add_argument("--ablation", choices=ds.ABLATIONS, default=None)
    p.add_argument("--include-image", action="store_true")
    p.set_defaults(fn=cmd_assemble)

    p = sub.add_parser("split", parents=[common], help="stratified train/test split")
    p.add_argument("--test-fraction", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--assignments", default=None,
                   help="JSON file {post_id: train|test}, honored verbatim")
    p.set_defaults(fn=cmd_split)

    p = sub.add_parser("stats", parents=[common], help="dataset statistics and length histogram")
    p.add_argument("--unit", choices=(ds.UNIT_CHARS, ds.UNIT_WHITESPACE_TOKENS),
                   default=ds.UNIT_WHITESPACE_TOKENS)
    p.add_argument("--bucket-width", type=int, default=50)
    p.set_defaults(fn=cmd_stats)

    for name, fn in (("eval", cmd_eval), ("sweep", cmd_sweep)):
        p = sub.add_parser(name, parents=[common], help=f"{name} against a model client")
        p.add_argument("--client", default=None,
                       help="echo | constant:<label> | chat | student")
        p.add_argument("--endpoint", default=None)
        p.add_argument("--split", choices=("train", "test", "all"), default="test")
        p.add_argument("--max-textual", type=int, default=None)
        p.add_argument("--max-visual", type=int, default=None)
        p.add_argument("--ablation", choices=ds.ABLATIONS, default=None)
        p.add_argument("--no-image", action="store_true")
        if name == "sweep":
            p.add_argument("--textual-grid", default="1..10")
            p.add_argument("--visual-grid", default="3")
        p.set_defaults(fn=fn)

    p = sub.add_parser("compare", parents=[common], help="compare >= 2 metrics.json files")
    p.add_argument("results", nargs="+")
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("plot", parents=[common], help="render sweep / histogram tables to images")
    p.add_argument("--sweep", default=None)
    p.add_argument("--histogram", default=None)
    p.set_defaults(fn=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except ConfigError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG_INVALID
    except FileNotFoundError as exc:
        print(f"error: missing input: {exc}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
