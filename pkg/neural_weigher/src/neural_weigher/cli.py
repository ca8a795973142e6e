"""CLI: init-base, train, infer.

Consumes the termweight corpus and weight-file formats; training targets
come from `termweight targets`, and inference output feeds
`termweight index --weights` / `termweight search --weighted-query`.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Sequence

from termweight.analysis import STEM_NONE, STEM_PORTER, AnalyzerConfig
from termweight.corpus import load_collection, load_queries
from termweight.targets import read_weights

from neural_weigher import TrainingError, __version__
from neural_weigher.align import DEFAULT_MAX_LEN, prepare
from neural_weigher.basevocab import init_base
from neural_weigher.inference import infer
from neural_weigher.model import TokenWeigher
from neural_weigher.training import TrainSettings, initial_loss, train

logger = logging.getLogger("neural_weigher")


def _analyzer_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--no-lowercase", action="store_true", help="keep original letter case")
    p.add_argument("--stem", choices=[STEM_PORTER, STEM_NONE], default=STEM_PORTER,
                   help="stemmer used for the analyzed-term bridge")
    p.add_argument("--stopwords", default=None, help="stopword file for the term bridge")


def _analyzer_config(args) -> AnalyzerConfig:
    stopwords = None
    if args.stopwords:
        with open(args.stopwords, encoding="utf-8") as f:
            stopwords = frozenset(line.strip() for line in f if line.strip())
    return AnalyzerConfig(lowercase=not args.no_lowercase, stem=args.stem, stopwords=stopwords)


def _owner_texts(args) -> list[tuple[str, str]]:
    if args.owners == "query":
        if not args.queries:
            raise TrainingError("--owners query requires --queries")
        return [(q.query_id, q.text) for q in load_queries(args.queries)]
    return [(d.external_id, d.text()) for d in load_collection(args.collection, args.format)]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="neural-weigher",
        description="Contextual per-token term weighting for the termweight engine.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    p = sub.add_parser("init-base", help="create a small random-init base checkpoint offline")
    p.add_argument("--collection", required=True, help="collection file (vocab source)")
    p.add_argument("--format", choices=["tsv", "jsonl"], default="tsv")
    p.add_argument("--out", required=True, help="base checkpoint directory")
    p.add_argument("--hidden", type=int, default=64)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--heads", type=int, default=2)
    p.add_argument("--max-positions", type=int, default=160)
    p.add_argument("--seed", type=int, default=13)
    p.set_defaults(func=cmd_init_base)

    p = sub.add_parser("train", help="fine-tune a base checkpoint on target weights")
    p.add_argument("--base", required=True, help="base checkpoint (directory or hub name)")
    p.add_argument("--targets", required=True, help="target weight JSONL from `termweight targets`")
    p.add_argument("--collection", required=True, help="collection file")
    p.add_argument("--format", choices=["tsv", "jsonl"], default="tsv")
    p.add_argument("--owners", choices=["doc", "query"], default="doc")
    p.add_argument("--queries", default=None, help="queries TSV (with --owners query)")
    p.add_argument("--out", required=True, help="output checkpoint directory")
    p.add_argument("--lr", type=float, default=2e-5, help="learning rate (default: %(default)s)")
    p.add_argument("--epochs", type=int, default=3, help="fine-tuning epochs (default: %(default)s)")
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--seed", type=int, default=13)
    p.add_argument("--max-len", type=int, default=DEFAULT_MAX_LEN,
                   help="maximum subword sequence length (default: %(default)s)")
    _analyzer_args(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("infer", help="predict weights for a collection or query set")
    p.add_argument("--checkpoint", required=True, help="trained checkpoint directory")
    p.add_argument("--collection", required=True, help="collection file")
    p.add_argument("--format", choices=["tsv", "jsonl"], default="tsv")
    p.add_argument("--owners", choices=["doc", "query"], default="doc")
    p.add_argument("--queries", default=None, help="queries TSV (with --owners query)")
    p.add_argument("--out", required=True, help="output directory (weights.jsonl, meta.json)")
    p.add_argument("--max-len", type=int, default=DEFAULT_MAX_LEN)
    _analyzer_args(p)
    p.set_defaults(func=cmd_infer)

    return parser


def cmd_init_base(args) -> int:
    texts = (d.text() for d in load_collection(args.collection, args.format))
    init_base(
        texts, args.out,
        hidden_size=args.hidden, num_layers=args.layers, num_heads=args.heads,
        max_positions=args.max_positions, seed=args.seed,
    )
    logger.info("wrote base checkpoint to %s", args.out)
    return 0


def cmd_train(args) -> int:
    config = _analyzer_config(args)
    model, tokenizer = TokenWeigher.from_base(args.base)
    texts = dict(_owner_texts(args))
    examples, stats = prepare(read_weights(args.targets), texts, tokenizer, config, args.max_len)
    settings = TrainSettings(
        learning_rate=args.lr, epochs=args.epochs,
        batch_size=args.batch_size, seed=args.seed,
    )
    history = train(model, examples, tokenizer.pad_token_id, settings)
    meta = {
        "base": args.base,
        "learning_rate": settings.learning_rate,
        "epochs": settings.epochs,
        "batch_size": settings.batch_size,
        "seed": settings.seed,
        "max_len": args.max_len,
        "loss_history": history,
        "prepare_stats": stats.as_dict(),
        "analyzer": {"lowercase": config.lowercase, "stem": config.stem},
    }
    model.save_checkpoint(args.out, tokenizer, meta)
    logger.info("losses per epoch: %s", ", ".join(f"{x:.5f}" for x in history))
    return 0


def cmd_infer(args) -> int:
    config = _analyzer_config(args)
    model, tokenizer, meta = TokenWeigher.load_checkpoint(args.checkpoint)
    stats = infer(
        model, tokenizer, _owner_texts(args), args.out,
        config=config, max_len=args.max_len,
        meta={"checkpoint": args.checkpoint, "trained_with": meta},
    )
    logger.info("wrote weights for %d owners to %s", stats.owners, args.out)
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s", stream=sys.stderr)
    parser = build_parser()
    args = parser.parse_args(sys.argv[1:] if argv is None else list(argv))
    try:
        return args.func(args)
    except (TrainingError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
