"""Run scoring: MRR@k, MAP@k, NDCG@k, recall@depth, win/tie/loss, sweeps.

Unjudged documents count as non-relevant. Queries with no relevant
documents (including queries absent from the qrels) are excluded from the
aggregate and reported in skipped_count.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

from termweight.corpus import Qrels, Query
from termweight.errors import EngineError
from termweight.index import InvertedIndex
from termweight.parallel import parallel_map
from termweight.retrieval import (
    Run,
    ScoredDoc,
    WeightedQuery,
    bm25_search,
    ql_search,
)
from termweight.analysis import analyze


@dataclass
class MetricReport:
    metric: str
    k: int
    per_query: dict[str, float] = field(default_factory=dict)
    skipped_count: int = 0

    @property
    def evaluated_count(self) -> int:
        return len(self.per_query)

    @property
    def mean(self) -> float:
        if not self.per_query:
            return 0.0
        return sum(self.per_query.values()) / len(self.per_query)

    def summary(self) -> dict:
        return {
            "metric": self.metric,
            "k": self.k,
            "mean": self.mean,
            "evaluated": self.evaluated_count,
            "skipped": self.skipped_count,
        }


def _evaluate(
    name: str,
    run: Run,
    qrels: Qrels,
    k: int,
    per_query: Callable[[list[ScoredDoc], set[str], dict[str, int]], float],
    threads: int = 1,
) -> MetricReport:
    if k < 1:
        raise EngineError(f"k must be >= 1, got {k}")
    report = MetricReport(metric=name, k=k)

    def one(item: tuple[str, list[ScoredDoc]]) -> tuple[str, float | None]:
        qid, ranked = item
        judged = qrels.judgments.get(qid, {})
        relevant = {d for d, g in judged.items() if g > 0}
        if not relevant:
            return qid, None
        return qid, per_query(ranked, relevant, judged)

    for qid, value in parallel_map(one, run.items(), threads):
        if value is None:
            report.skipped_count += 1
        else:
            report.per_query[qid] = value
    return report


def mrr_at_k(run: Run, qrels: Qrels, k: int = 10, threads: int = 1) -> MetricReport:
    """Reciprocal rank of the first relevant document within the top k."""

    def per_query(ranked, relevant, judged):
        for doc in ranked[:k]:
            if doc.external_id in relevant:
                return 1.0 / doc.rank
        return 0.0

    return _evaluate("mrr", run, qrels, k, per_query, threads)


def map_at_k(run: Run, qrels: Qrels, k: int = 1000, threads: int = 1) -> MetricReport:
    """Mean of precision at each relevant retrieved rank, over all relevant."""

    def per_query(ranked, relevant, judged):
        hits = 0
        precision_sum = 0.0
        for doc in ranked[:k]:
            if doc.external_id in relevant:
                hits += 1
                precision_sum += hits / doc.rank
        return precision_sum / len(relevant)

    return _evaluate("map", run, qrels, k, per_query, threads)


def ndcg_at_k(run: Run, qrels: Qrels, k: int = 20, threads: int = 1) -> MetricReport:
    """Exponential-gain NDCG: (2^grade - 1) / log2(rank + 1)."""

    def per_query(ranked, relevant, judged):
        dcg = 0.0
        for doc in ranked[:k]:
            grade = judged.get(doc.external_id, 0)
            if grade > 0:
                dcg += (2**grade - 1) / math.log2(doc.rank + 1)
        ideal = sorted((g for g in judged.values() if g > 0), reverse=True)
        idcg = sum((2**g - 1) / math.log2(r + 1) for r, g in enumerate(ideal[:k], 1))
        return dcg / idcg

    return _evaluate("ndcg", run, qrels, k, per_query, threads)


def recall_at_depth(run: Run, qrels: Qrels, depth: int, threads: int = 1) -> MetricReport:
    """Fraction of the relevant documents present in the top ``depth``."""

    def per_query(ranked, relevant, judged):
        found = sum(1 for doc in ranked[:depth] if doc.external_id in relevant)
        return found / len(relevant)

    return _evaluate("recall", run, qrels, depth, per_query, threads)


METRICS: dict[str, Callable[..., MetricReport]] = {
    "mrr": mrr_at_k,
    "map": map_at_k,
    "ndcg": ndcg_at_k,
    "recall": recall_at_depth,
}


def win_tie_loss(
    run_a: Run,
    run_b: Run,
    qrels: Qrels,
    metric: str = "mrr",
    k: int = 10,
    epsilon: float = 0.0,
) -> tuple[int, int, int]:
    """Per-query count of a improving on, matching, or losing to b.

    Queries skipped by the metric (no relevant docs) are excluded; the three
    counts sum to the evaluated query count.
    """
    if metric not in METRICS:
        raise EngineError(f"unknown metric {metric!r}")
    if set(run_a) != set(run_b):
        raise EngineError("win/tie/loss requires both runs to cover the same query set")
    report_a = METRICS[metric](run_a, qrels, k)
    report_b = METRICS[metric](run_b, qrels, k)
    win = tie = loss = 0
    for qid, value_a in report_a.per_query.items():
        value_b = report_b.per_query[qid]
        if value_a > value_b + epsilon:
            win += 1
        elif value_b > value_a + epsilon:
            loss += 1
        else:
            tie += 1
    return win, tie, loss


def run_queries(
    index: InvertedIndex,
    queries: Sequence[Query],
    model: str,
    k: int = 1000,
    **params,
) -> Run:
    """Batch plain (uniform-weight) search over a query list."""
    run: Run = {}
    for query in queries:
        terms = analyze(query.text, index.meta.analyzer)
        wq = WeightedQuery.uniform(terms)
        if model == "bm25":
            run[query.query_id] = bm25_search(index, wq, k, **params)
        elif model == "ql":
            run[query.query_id] = ql_search(index, wq, k, **params)
        else:
            raise EngineError(f"unknown retrieval model {model!r}")
    return run


def sweep(
    index: InvertedIndex,
    queries: Sequence[Query],
    qrels: Qrels,
    model: str,
    grid: Sequence[dict[str, float]],
    metric: str = "mrr",
    metric_k: int = 10,
    depth: int = 1000,
) -> tuple[dict[str, float], list[tuple[dict[str, float], float]]]:
    """Evaluate every grid point; ties go to the smallest parameter tuple."""
    if not grid:
        raise EngineError("sweep requires a non-empty grid")
    if metric not in METRICS:
        raise EngineError(f"unknown metric {metric!r}")
    table: list[tuple[dict[str, float], float]] = []
    best: tuple[float, tuple] | None = None
    best_params: dict[str, float] | None = None
    for params in grid:
        run = run_queries(index, queries, model, k=depth, **params)
        value = METRICS[metric](run, qrels, metric_k).mean
        table.append((dict(params), value))
        key = tuple(params[name] for name in sorted(params))
        if best is None or value > best[0] or (value == best[0] and key < best[1]):
            best = (value, key)
            best_params = dict(params)
    assert best_params is not None
    return best_params, table


def make_grid(**axes: Sequence[float]) -> list[dict[str, float]]:
    """Cartesian product of named parameter axes, in sorted-name order."""
    names = sorted(axes)
    points = []
    for combo in itertools.product(*(axes[n] for n in names)):
        points.append(dict(zip(names, combo)))
    return points


def write_per_query_tsv(report: MetricReport, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for qid, value in report.per_query.items():
            f.write(f"{qid}\t{value:.6f}\n")


def write_summary_json(report: MetricReport, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report.summary(), f, sort_keys=True)
        f.write("\n")
