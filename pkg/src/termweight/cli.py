"""Command-line entry point wiring the full pipeline.

Subcommands: index, targets, train, predict, search, evaluate, compare,
sweep, stats, export. Exit codes: 0 success, 1 module error (one-line
diagnostic on stderr), 2 usage error. Config precedence: CLI flag >
--config file (key=value lines) > built-in default.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import Sequence

from termweight import __version__, evaluation, index as index_mod, retrieval, weigher
from termweight.analysis import STEM_NONE, STEM_PORTER, AnalyzerConfig, analyze
from termweight.corpus import load_collection, load_qrels, load_queries
from termweight.errors import ConfigError, EngineError
from termweight.parallel import parallel_map
from termweight.targets import WeightRecord, compute_qtr, compute_tr, read_weights, write_weights

logger = logging.getLogger("termweight")

# Every dest that may appear in a --config file, across all subcommands.
_CONFIG_KEYS: set[str] = set()


def _add(parser: argparse.ArgumentParser, *flags, **kwargs) -> None:
    action = parser.add_argument(*flags, **kwargs)
    _CONFIG_KEYS.add(action.dest)


def _analyzer_args(parser: argparse.ArgumentParser) -> None:
    _add(parser, "--no-lowercase", action="store_true", help="keep original letter case")
    _add(parser, "--stem", choices=[STEM_PORTER, STEM_NONE], default=STEM_PORTER,
         help="stemmer applied after tokenization (default: %(default)s)")
    _add(parser, "--stopwords", metavar="FILE", default=None,
         help="file with one stopword per line, removed before stemming")


def _analyzer_config(args: argparse.Namespace) -> AnalyzerConfig:
    stopwords = None
    if args.stopwords:
        with open(args.stopwords, encoding="utf-8") as f:
            stopwords = frozenset(line.strip() for line in f if line.strip())
    return AnalyzerConfig(lowercase=not args.no_lowercase, stem=args.stem, stopwords=stopwords)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="termweight",
        description="First-stage retrieval with learned, integer-scaled term weights.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    p = sub.add_parser("index", help="build and persist an inverted index")
    _add(p, "--collection", required=True, help="collection file")
    _add(p, "--format", choices=["tsv", "jsonl"], default="tsv", help="collection format")
    _add(p, "--out", required=True, help="output index directory")
    _add(p, "--weights", default=None, metavar="FILE",
         help="weight file; switches the build to weighted mode")
    _add(p, "--scale-n", type=int, default=index_mod.DEFAULT_SCALE,
         help="integer scale for predicted weights (default: %(default)s)")
    _add(p, "--fallback", choices=["strict", "drop_doc", "use_tf"], default="strict",
         help="policy for documents missing from the weight file")
    _add(p, "--positional", action="store_true", help="store term positions")
    _add(p, "--threads", type=int, default=1, help="analysis worker threads")
    _analyzer_args(p)
    p.add_argument("--config", default=None, help="key=value config file")
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("targets", help="compute ground-truth term importance from qrels")
    p.add_argument("kind", choices=["qtr", "tr"],
                   help="qtr: per-document targets; tr: per-query targets")
    _add(p, "--qrels", required=True, help="qrels file")
    _add(p, "--queries", required=True, help="queries TSV")
    _add(p, "--collection", required=True, help="collection file")
    _add(p, "--format", choices=["tsv", "jsonl"], default="tsv", help="collection format")
    _add(p, "--out", required=True, help="output weight JSONL")
    _analyzer_args(p)
    p.add_argument("--config", default=None, help="key=value config file")
    p.set_defaults(func=cmd_targets)

    p = sub.add_parser("train", help="fit the linear term weigher on targets")
    _add(p, "--targets", required=True, help="target weight JSONL (from `targets`)")
    _add(p, "--collection", required=True, help="collection file (for features)")
    _add(p, "--format", choices=["tsv", "jsonl"], default="tsv", help="collection format")
    _add(p, "--owners", choices=["doc", "query"], default="doc",
         help="whether targets are keyed by document or query ids")
    _add(p, "--queries", default=None, help="queries TSV (required with --owners query)")
    _add(p, "--out", required=True, help="output model JSON")
    _add(p, "--lr", type=float, default=1e-3, help="learning rate (default: %(default)s)")
    _add(p, "--epochs", type=int, default=200, help="gradient descent epochs")
    _add(p, "--seed", type=int, default=13, help="RNG seed (default: %(default)s)")
    _add(p, "--subsample", type=float, default=1.0,
         help="fraction of training examples to sample (default: %(default)s)")
    _analyzer_args(p)
    p.add_argument("--config", default=None, help="key=value config file")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict term weights with a trained model")
    _add(p, "--model", required=True, help="model JSON from `train`")
    _add(p, "--collection", required=True, help="collection file")
    _add(p, "--format", choices=["tsv", "jsonl"], default="tsv", help="collection format")
    _add(p, "--owners", choices=["doc", "query"], default="doc",
         help="predict for every document, or for queries (needs --queries)")
    _add(p, "--queries", default=None, help="queries TSV (required with --owners query)")
    _add(p, "--out", required=True, help="output weight JSONL")
    _analyzer_args(p)
    p.add_argument("--config", default=None, help="key=value config file")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("search", help="rank documents for a query file")
    p.add_argument("model", choices=["bm25", "ql"], help="retrieval model")
    _add(p, "--index", required=True, help="index directory")
    _add(p, "--queries", required=True, help="queries TSV")
    _add(p, "--out", required=True, help="output run file")
    _add(p, "--k", type=int, default=retrieval.DEFAULT_K, help="results per query")
    _add(p, "--k1", type=float, default=retrieval.DEFAULT_K1, help="BM25 k1")
    _add(p, "--b", type=float, default=retrieval.DEFAULT_B, help="BM25 b")
    _add(p, "--lam", type=float, default=retrieval.DEFAULT_LAMBDA,
         help="QL Jelinek-Mercer smoothing (default: %(default)s)")
    _add(p, "--weighted-query", default=None, metavar="FILE",
         help="weight JSONL keyed by query id; builds weighted queries")
    _add(p, "--sdm", action="store_true",
         help="sequential dependency execution (ql only; needs a positional index)")
    _add(p, "--mix", default=None, metavar="T,O,U",
         help="SDM mixture weights (default: 0.85,0.10,0.05)")
    _add(p, "--window", type=int, default=retrieval.SDM_DEFAULT_WINDOW,
         help="SDM unordered window size (default: %(default)s)")
    _add(p, "--tag", default=None, help="run tag (default: model and parameters)")
    _add(p, "--threads", type=int, default=1, help="per-query worker threads")
    p.add_argument("--config", default=None, help="key=value config file")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("evaluate", help="score a run file against qrels")
    p.add_argument("metric", choices=["mrr", "map", "ndcg", "recall"], help="metric")
    _add(p, "--run", required=True, help="run file")
    _add(p, "--qrels", required=True, help="qrels file")
    _add(p, "--k", type=int, default=None,
         help="cutoff (defaults: mrr 10, map 1000, ndcg 20, recall 1000)")
    _add(p, "--out", default=None, help="write the JSON summary here as well")
    _add(p, "--per-query", default=None, metavar="FILE", help="write per-query TSV")
    _add(p, "--threads", type=int, default=1, help="per-query worker threads")
    p.add_argument("--config", default=None, help="key=value config file")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="win/tie/loss between two runs")
    _add(p, "--run-a", required=True, help="first run file")
    _add(p, "--run-b", required=True, help="second run file")
    _add(p, "--qrels", required=True, help="qrels file")
    _add(p, "--metric", choices=["mrr", "map", "ndcg", "recall"], default="mrr")
    _add(p, "--k", type=int, default=10, help="metric cutoff (default: %(default)s)")
    _add(p, "--epsilon", type=float, default=0.0,
         help="treat per-query differences <= epsilon as ties")
    _add(p, "--out", default=None, help="write the JSON result here as well")
    p.add_argument("--config", default=None, help="key=value config file")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="grid search retrieval parameters")
    _add(p, "--index", required=True, help="index directory")
    _add(p, "--queries", required=True, help="queries TSV")
    _add(p, "--qrels", required=True, help="qrels file")
    _add(p, "--model", choices=["bm25", "ql"], default="bm25")
    _add(p, "--metric", choices=["mrr", "map", "ndcg", "recall"], default="mrr")
    _add(p, "--metric-k", type=int, default=10, help="metric cutoff")
    _add(p, "--depth", type=int, default=1000, help="retrieval depth per grid point")
    _add(p, "--k1-grid", default="0.6,0.9,1.2", help="comma-separated BM25 k1 values")
    _add(p, "--b-grid", default="0.2,0.4,0.75", help="comma-separated BM25 b values")
    _add(p, "--lam-grid", default="0.2,0.4,0.6,0.8", help="comma-separated QL lambda values")
    _add(p, "--out", default=None, help="write the sweep table TSV here")
    p.add_argument("--config", default=None, help="key=value config file")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("stats", help="weight-distribution profile of an index")
    _add(p, "--index", required=True, help="index directory")
    _add(p, "--top-k", type=int, default=10, help="number of weight ranks (default: %(default)s)")
    _add(p, "--out", default=None, help="write the profile TSV here")
    p.add_argument("--config", default=None, help="key=value config file")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("export", help="truncate a run file to a re-ranking candidate set")
    _add(p, "--run", required=True, help="input run file")
    _add(p, "--depth", type=int, required=True, help="candidates per query")
    _add(p, "--tag", required=True, help="tag for the exported run")
    _add(p, "--out", required=True, help="output run file")
    p.add_argument("--config", default=None, help="key=value config file")
    p.set_defaults(func=cmd_export)

    return parser


# ---------------------------------------------------------------------------
# Config file handling
# ---------------------------------------------------------------------------


def _load_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            values[key.strip()] = value.strip()
    return values


def _flag_given(argv: Sequence[str], dest: str) -> bool:
    flag = "--" + dest.replace("_", "-")
    return any(tok == flag or tok.startswith(flag + "=") for tok in argv)


def _convert(current, raw: str, key: str):
    if isinstance(current, bool):
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"config key {key!r}: expected a boolean, got {raw!r}")
    for typ in (int, float):
        if isinstance(current, typ):
            try:
                return typ(raw)
            except ValueError:
                raise ConfigError(f"config key {key!r}: expected {typ.__name__}, got {raw!r}")
    return raw


def _apply_config(args: argparse.Namespace, argv: Sequence[str]) -> None:
    if not args.config:
        return
    for key, raw in _load_config_file(args.config).items():
        dest = key.replace("-", "_")
        if dest not in _CONFIG_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        if dest not in vars(args) or _flag_given(argv, dest):
            continue
        setattr(args, dest, _convert(getattr(args, dest), raw, key))


def _resolved_config(args: argparse.Namespace) -> list[str]:
    skip = {"func", "command", "config"}
    lines = []
    for dest in sorted(vars(args)):
        if dest in skip:
            continue
        lines.append(f"{dest}={getattr(args, dest)}")
    return lines


def _echo_config(args: argparse.Namespace, out_dir: str | None = None) -> None:
    lines = _resolved_config(args)
    logger.info("resolved config: %s", " ".join(lines))
    if out_dir is not None:
        with open(os.path.join(out_dir, "config.txt"), "w", encoding="utf-8") as f:
            f.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_index(args) -> int:
    config = _analyzer_config(args)
    docs = load_collection(args.collection, args.format)
    if args.weights:
        source = {rec.owner_id: rec for rec in read_weights(args.weights)}
        idx = index_mod.build_index(
            docs, config, mode=index_mod.MODE_WEIGHTED, weight_source=source,
            scale_n=args.scale_n, positional=args.positional,
            fallback=args.fallback, threads=args.threads,
        )
    else:
        idx = index_mod.build_index(
            docs, config, mode=index_mod.MODE_TF,
            positional=args.positional, threads=args.threads,
        )
    index_mod.persist(idx, args.out)
    _echo_config(args, args.out)
    logger.info(
        "indexed %d docs, %d terms, total weight %d",
        idx.meta.doc_count, len(idx.postings), idx.meta.total_weight,
    )
    return 0


def cmd_targets(args) -> int:
    config = _analyzer_config(args)
    qrels = load_qrels(args.qrels)
    queries = load_queries(args.queries)
    docs = load_collection(args.collection, args.format)
    compute = compute_qtr if args.kind == "qtr" else compute_tr
    n = write_weights(compute(qrels, queries, docs, config), args.out)
    _echo_config(args)
    logger.info("wrote %d %s target records to %s", n, args.kind, args.out)
    return 0


def _owner_texts(args) -> list[tuple[str, str, str | None]]:
    """(owner_id, text, title) triples for the chosen owner kind."""
    if args.owners == "query":
        if not args.queries:
            raise EngineError("--owners query requires --queries")
        return [(q.query_id, q.text, None) for q in load_queries(args.queries)]
    return [(d.external_id, d.body, d.title) for d in load_collection(args.collection, args.format)]


def _collection_stats(args, config) -> tuple[dict[str, int], int]:
    df: dict[str, int] = {}
    n_docs = 0
    for doc in load_collection(args.collection, args.format):
        n_docs += 1
        for term in set(analyze(doc.text(), config)):
            df[term] = df.get(term, 0) + 1
    return df, n_docs


def cmd_train(args) -> int:
    config = _analyzer_config(args)
    df, n_docs = _collection_stats(args, config)
    features: dict[str, dict[str, weigher.FeatureVector]] = {}
    for owner_id, text, title in _owner_texts(args):
        title_terms = frozenset(analyze(title, config)) if title else frozenset()
        full = f"{title} {text}" if title else text
        features[owner_id] = weigher.extract_features(analyze(full, config), title_terms, df, n_docs)

    examples: list[tuple[weigher.FeatureVector, float]] = []
    skipped = 0
    for record in read_weights(args.targets):
        owner = features.get(record.owner_id)
        if owner is None:
            raise EngineError(f"target owner {record.owner_id!r} not found among {args.owners} owners")
        for term, target in sorted(record.weights.items()):
            f = owner.get(term)
            if f is None:
                skipped += 1
                continue
            examples.append((f, target))
    if skipped:
        logger.warning("skipped %d target terms absent from their owner's analyzed text", skipped)

    model = weigher.train(
        examples,
        weigher.TrainConfig(
            learning_rate=args.lr, epochs=args.epochs,
            seed=args.seed, subsample_fraction=args.subsample,
        ),
    )
    weigher.save_model(model, args.out)
    _echo_config(args)
    logger.info(
        "trained on %d/%d examples, final loss %.6g",
        model.training_meta["examples_used"], len(examples), model.training_meta["final_loss"],
    )
    return 0


def cmd_predict(args) -> int:
    config = _analyzer_config(args)
    model = weigher.load_model(args.model)
    df, n_docs = _collection_stats(args, config)

    def records():
        for owner_id, text, title in _owner_texts(args):
            title_terms = frozenset(analyze(title, config)) if title else frozenset()
            full = f"{title} {text}" if title else text
            feats = weigher.extract_features(analyze(full, config), title_terms, df, n_docs)
            yield WeightRecord(owner_id, {t: weigher.predict_raw(model, f) for t, f in feats.items()})

    n = write_weights(records(), args.out)
    _echo_config(args)
    logger.info("wrote predictions for %d owners to %s", n, args.out)
    return 0


def cmd_search(args) -> int:
    idx = index_mod.load(args.index)
    queries = load_queries(args.queries)
    config = idx.meta.analyzer

    if args.sdm and args.model != "ql":
        print("usage error: --sdm is only valid with the ql model", file=sys.stderr)
        return 2
    mix = retrieval.SDM_DEFAULT_MIX
    if args.mix:
        parts = [float(x) for x in args.mix.split(",")]
        if len(parts) != 3:
            raise EngineError(f"--mix expects three comma-separated values, got {args.mix!r}")
        mix = (parts[0], parts[1], parts[2])

    weight_map = None
    if args.weighted_query:
        weight_map = {rec.owner_id: rec for rec in read_weights(args.weighted_query)}

    def search_one(query):
        record = None
        if weight_map is not None:
            record = weight_map.get(query.query_id)
            if record is None:
                raise EngineError(f"no weight record for query {query.query_id!r}")
        if args.sdm:
            sdm = retrieval.make_sdm_query(query, record, config, mix=mix, window=args.window)
            return query.query_id, retrieval.sdm_search(idx, sdm, args.k, lam=args.lam)
        if record is not None:
            wq = retrieval.make_weighted_query(query, record, config)
        else:
            wq = retrieval.WeightedQuery.uniform(analyze(query.text, config))
        if args.model == "bm25":
            return query.query_id, retrieval.bm25_search(idx, wq, args.k, k1=args.k1, b=args.b)
        return query.query_id, retrieval.ql_search(idx, wq, args.k, lam=args.lam)

    run: retrieval.Run = {}
    for qid, ranked in parallel_map(search_one, queries, args.threads):
        run[qid] = ranked

    tag = args.tag
    if tag is None:
        if args.sdm:
            tag = f"sdm-lam{args.lam}"
        elif args.model == "bm25":
            tag = f"bm25-k1_{args.k1}-b_{args.b}"
        else:
            tag = f"ql-lam{args.lam}"
    retrieval.write_run(run, args.out, tag)
    _echo_config(args)
    logger.info("wrote run for %d queries to %s", len(run), args.out)
    return 0


_METRIC_DEFAULT_K = {"mrr": 10, "map": 1000, "ndcg": 20, "recall": 1000}


def cmd_evaluate(args) -> int:
    run = retrieval.read_run(args.run)
    qrels = load_qrels(args.qrels)
    k = args.k if args.k is not None else _METRIC_DEFAULT_K[args.metric]
    report = evaluation.METRICS[args.metric](run, qrels, k, threads=args.threads)
    print(json.dumps(report.summary(), sort_keys=True))
    if args.out:
        evaluation.write_summary_json(report, args.out)
    if args.per_query:
        evaluation.write_per_query_tsv(report, args.per_query)
    _echo_config(args)
    return 0


def cmd_compare(args) -> int:
    run_a = retrieval.read_run(args.run_a)
    run_b = retrieval.read_run(args.run_b)
    qrels = load_qrels(args.qrels)
    win, tie, loss = evaluation.win_tie_loss(run_a, run_b, qrels, args.metric, args.k, args.epsilon)
    result = {"win": win, "tie": tie, "loss": loss, "metric": args.metric, "k": args.k}
    print(json.dumps(result, sort_keys=True))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            json.dump(result, f, sort_keys=True)
            f.write("\n")
    return 0


def cmd_sweep(args) -> int:
    idx = index_mod.load(args.index)
    queries = load_queries(args.queries)
    qrels = load_qrels(args.qrels)
    if args.model == "bm25":
        grid = evaluation.make_grid(
            k1=[float(x) for x in args.k1_grid.split(",")],
            b=[float(x) for x in args.b_grid.split(",")],
        )
    else:
        grid = evaluation.make_grid(lam=[float(x) for x in args.lam_grid.split(",")])
    best, table = evaluation.sweep(
        idx, queries, qrels, args.model, grid,
        metric=args.metric, metric_k=args.metric_k, depth=args.depth,
    )
    print(json.dumps({"best": best, "metric": args.metric, "k": args.metric_k}, sort_keys=True))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            for params, value in table:
                desc = ",".join(f"{k}={v}" for k, v in sorted(params.items()))
                f.write(f"{desc}\t{value:.6f}\n")
    return 0


def cmd_stats(args) -> int:
    idx = index_mod.load(args.index)
    profile = index_mod.weight_rank_profile(idx, args.top_k)
    print(json.dumps({"profile": profile, "top_k": args.top_k}))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            for rank, value in enumerate(profile, 1):
                f.write(f"{rank}\t{value:.6f}\n")
    return 0


def cmd_export(args) -> int:
    run = retrieval.read_run(args.run)
    retrieval.export_candidates(run, args.depth, args.tag, args.out)
    logger.info("exported depth-%d candidates for %d queries to %s", args.depth, len(run), args.out)
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s", stream=sys.stderr)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args, argv)
        return args.func(args)
    except EngineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
