"""Command line: train adapters on an instruction-record file, serve a student.

    distill-trainer train --records dataset/train.jsonl --out adapters/run1 \
        --base tiny-64 --epochs 50 --batch-size 64
    distill-trainer serve --base tiny-64 --adapter adapters/run1 --port 8731
"""

from __future__ import annotations

import argparse
import sys

from .config import AdamWSettings, TrainConfig
from .data import build_training_corpus
from .tokenizer import ByteTokenizer
from .train import train


def cmd_train(args) -> int:
    config = TrainConfig(
        base_model_id=args.base,
        lora_rank=args.rank,
        lora_alpha=args.alpha,
        target_projections=tuple(args.targets.split(",")),
        optimizer=AdamWSettings(weight_decay=args.weight_decay),
        learning_rate=args.lr,
        epochs=args.epochs,
        batch_size=args.batch_size,
        max_new_tokens=args.max_new_tokens,
        seed=args.seed,
        max_seq_len=args.max_seq_len,
    )
    config.validate()
    corpus = build_training_corpus(args.records, ByteTokenizer(),
                                   max_seq_len=args.max_seq_len)
    result = train(config, corpus, args.out)
    first = result.losses[0][1]
    last = result.losses[-1][1]
    print(f"trained {len(corpus)} examples, {len(result.losses)} steps; "
          f"loss {first:.4f} -> {last:.4f}")
    print(f"adapter parameters: {result.adapter_parameter_count}")
    print(f"base checksum unchanged: "
          f"{result.base_checksum_before == result.base_checksum_after}")
    print(f"artifact: {result.adapter_dir}")
    return 0


def cmd_serve(args) -> int:
    from .serve import StudentServer

    server = StudentServer(args.base, args.adapter, host=args.host,
                           port=args.port, max_new_tokens=args.max_new_tokens)
    print(f"serving {args.base} + {args.adapter} at {server.address}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="distill-trainer", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fine-tune adapters on instruction records")
    p.add_argument("--records", required=True, help="instruction-record JSONL")
    p.add_argument("--out", required=True, help="adapter output directory")
    p.add_argument("--base", default="tiny-64")
    p.add_argument("--rank", type=int, default=16)
    p.add_argument("--alpha", type=int, default=16)
    p.add_argument("--targets", default="query,value,output")
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--weight-decay", type=float, default=0.0)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--max-new-tokens", type=int, default=2048)
    p.add_argument("--max-seq-len", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("serve", help="serve a trained student over HTTP")
    p.add_argument("--base", default="tiny-64")
    p.add_argument("--adapter", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8731)
    p.add_argument("--max-new-tokens", type=int, default=2048)
    p.set_defaults(fn=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
