import itertools
import math
import random

import pytest

from termweight.analysis import AnalyzerConfig
from termweight.corpus import Document, Qrels, Query
from termweight.errors import EngineError
from termweight.evaluation import (
    make_grid,
    map_at_k,
    mrr_at_k,
    ndcg_at_k,
    recall_at_depth,
    sweep,
    win_tie_loss,
)
from termweight.index import build_index
from termweight.retrieval import ScoredDoc

PLAIN = AnalyzerConfig(stem="none")


def _run(qid, *doc_ids):
    return {qid: [ScoredDoc(d, 10.0 - r, r) for r, d in enumerate(doc_ids, 1)]}


def _qrels(qid, **grades):
    qrels = Qrels()
    for doc, grade in grades.items():
        qrels.add(qid, doc, grade)
    return qrels


class TestMRR:
    def test_first_relevant_at_rank_one(self):
        report = mrr_at_k(_run("q1", "d1", "d2"), _qrels("q1", d1=1), 10)
        assert report.per_query["q1"] == 1.0

    def test_first_relevant_at_rank_three(self):
        report = mrr_at_k(_run("q1", "x", "y", "d1"), _qrels("q1", d1=1), 10)
        assert report.per_query["q1"] == pytest.approx(1 / 3)

    def test_relevant_beyond_cutoff_scores_zero(self):
        docs = [f"x{i}" for i in range(10)] + ["d1"]
        report = mrr_at_k(_run("q1", *docs), _qrels("q1", d1=1), 10)
        assert report.per_query["q1"] == 0.0

    def test_query_without_judgments_skipped(self):
        run = {**_run("q1", "d1"), **_run("q2", "d2")}
        report = mrr_at_k(run, _qrels("q1", d1=1), 10)
        assert report.evaluated_count == 1
        assert report.skipped_count == 1

    def test_permuting_below_cutoff_changes_nothing(self):
        rng = random.Random(51)
        head = ["a", "b", "d1", "c"]
        tail = [f"t{i}" for i in range(20)]
        qrels = _qrels("q1", d1=1)
        base = mrr_at_k(_run("q1", *(head + tail)), qrels, 4).per_query["q1"]
        for _ in range(10):
            rng.shuffle(tail)
            got = mrr_at_k(_run("q1", *(head + tail)), qrels, 4).per_query["q1"]
            assert got == base


class TestMAP:
    def test_worked_example(self):
        # relevant at ranks 1 and 3, two relevant total
        report = map_at_k(_run("q1", "d1", "x", "d2"), _qrels("q1", d1=1, d2=1), 1000)
        assert report.per_query["q1"] == pytest.approx((1 + 2 / 3) / 2, abs=1e-9)

    def test_all_relevant_on_top(self):
        report = map_at_k(_run("q1", "d1", "d2", "x"), _qrels("q1", d1=1, d2=1), 1000)
        assert report.per_query["q1"] == 1.0

    def test_no_relevant_retrieved(self):
        report = map_at_k(_run("q1", "x", "y"), _qrels("q1", d1=1), 1000)
        assert report.per_query["q1"] == 0.0

    def test_unretrieved_relevant_counts_in_denominator(self):
        report = map_at_k(_run("q1", "d1"), _qrels("q1", d1=1, d2=1, d3=1), 1000)
        assert report.per_query["q1"] == pytest.approx(1 / 3)


class TestNDCG:
    def test_single_relevant_at_rank_one(self):
        report = ndcg_at_k(_run("q1", "d1"), _qrels("q1", d1=1), 20)
        assert report.per_query["q1"] == 1.0

    def test_single_relevant_at_rank_two(self):
        report = ndcg_at_k(_run("q1", "x", "d1"), _qrels("q1", d1=1), 20)
        assert report.per_query["q1"] == pytest.approx(1 / math.log2(3), abs=1e-9)

    def test_ideal_ordering_of_mixed_grades_is_one(self):
        qrels = _qrels("q1", d1=3, d2=2, d3=1)
        report = ndcg_at_k(_run("q1", "d1", "d2", "d3"), qrels, 20)
        assert report.per_query["q1"] == pytest.approx(1.0, abs=1e-12)

    def test_exponential_gain(self):
        qrels = _qrels("q1", d1=2, d2=1)
        report = ndcg_at_k(_run("q1", "d2", "d1"), qrels, 20)
        dcg = 1 / math.log2(2) + 3 / math.log2(3)
        idcg = 3 / math.log2(2) + 1 / math.log2(3)
        assert report.per_query["q1"] == pytest.approx(dcg / idcg, abs=1e-12)

    def test_all_grades_zero_skipped(self):
        report = ndcg_at_k(_run("q1", "d1"), _qrels("q1", d1=0), 20)
        assert report.evaluated_count == 0
        assert report.skipped_count == 1


class TestRecall:
    def test_relevant_within_depth(self):
        docs = ["x1", "x2", "x3", "x4", "d1"]
        assert recall_at_depth(_run("q1", *docs), _qrels("q1", d1=1), 10).per_query["q1"] == 1.0

    def test_relevant_beyond_depth(self):
        docs = ["x1", "x2", "x3", "x4", "d1"]
        assert recall_at_depth(_run("q1", *docs), _qrels("q1", d1=1), 4).per_query["q1"] == 0.0

    def test_partial_recall(self):
        qrels = _qrels("q1", d1=1, d2=1, d3=1, d4=1)
        run = _run("q1", "d1", "x", "d2")
        assert recall_at_depth(run, qrels, 100).per_query["q1"] == 0.5

    def test_monotone_in_depth(self):
        rng = random.Random(52)
        docs = [f"d{i}" for i in range(30)]
        rng.shuffle(docs)
        qrels = _qrels("q1", d3=1, d7=1, d11=1, d25=1)
        values = [
            recall_at_depth(_run("q1", *docs), qrels, depth).per_query["q1"]
            for depth in range(1, 31)
        ]
        assert all(b >= a for a, b in zip(values, values[1:]))


class TestReports:
    def test_aggregate_equals_mean_of_per_query(self):
        rng = random.Random(53)
        run = {}
        qrels = Qrels()
        for i in range(40):
            qid = f"q{i}"
            docs = [f"d{i}_{j}" for j in range(10)]
            rng.shuffle(docs)
            run.update(_run(qid, *docs))
            qrels.add(qid, f"d{i}_{rng.randint(0, 9)}", 1)
        for fn, k in ((mrr_at_k, 10), (map_at_k, 100), (ndcg_at_k, 20), (recall_at_depth, 5)):
            report = fn(run, qrels, k)
            mean = sum(report.per_query.values()) / len(report.per_query)
            assert abs(report.mean - mean) < 1e-12
            assert all(0.0 <= v <= 1.0 for v in report.per_query.values())

    def test_summary_schema(self):
        report = mrr_at_k(_run("q1", "d1"), _qrels("q1", d1=1), 10)
        assert report.summary() == {
            "metric": "mrr", "k": 10, "mean": 1.0, "evaluated": 1, "skipped": 0,
        }

    def test_threads_do_not_change_report(self):
        run = {}
        qrels = Qrels()
        for i in range(25):
            run.update(_run(f"q{i}", "a", f"d{i}", "b"))
            qrels.add(f"q{i}", f"d{i}", 1)
        one = mrr_at_k(run, qrels, 10, threads=1)
        many = mrr_at_k(run, qrels, 10, threads=8)
        assert one.per_query == many.per_query


class TestWinTieLoss:
    def test_identical_runs_all_tie(self):
        run = {**_run("q1", "d1"), **_run("q2", "d2")}
        qrels = Qrels()
        qrels.add("q1", "d1", 1)
        qrels.add("q2", "d2", 1)
        assert win_tie_loss(run, dict(run), qrels) == (0, 2, 0)

    def test_total_win(self):
        qrels = Qrels()
        run_a, run_b = {}, {}
        for i in range(5):
            qid = f"q{i}"
            qrels.add(qid, "rel", 1)
            run_a.update(_run(qid, "rel", "x"))
            run_b.update(_run(qid, *(f"junk{j}" for j in range(12))))
        assert win_tie_loss(run_a, run_b, qrels, "mrr", 10) == (5, 0, 0)

    def test_counts_match_per_query_recomputation(self):
        rng = random.Random(54)
        qrels = Qrels()
        run_a, run_b = {}, {}
        for i in range(30):
            qid = f"q{i}"
            docs = [f"d{j}" for j in range(8)]
            qrels.add(qid, rng.choice(docs), 1)
            da = docs[:]
            db = docs[:]
            rng.shuffle(da)
            rng.shuffle(db)
            run_a.update(_run(qid, *da))
            run_b.update(_run(qid, *db))
        w, t, l = win_tie_loss(run_a, run_b, qrels, "mrr", 10)
        ra = mrr_at_k(run_a, qrels, 10).per_query
        rb = mrr_at_k(run_b, qrels, 10).per_query
        assert w == sum(1 for q in ra if ra[q] > rb[q])
        assert t == sum(1 for q in ra if ra[q] == rb[q])
        assert l == sum(1 for q in ra if ra[q] < rb[q])
        assert w + t + l == len(ra)

    def test_query_set_mismatch_errors(self):
        with pytest.raises(EngineError, match="same query set"):
            win_tie_loss(_run("q1", "d1"), _run("q2", "d1"), Qrels())

    def test_epsilon_turns_small_differences_into_ties(self):
        qrels = Qrels()
        qrels.add("q1", "d1", 1)
        run_a = _run("q1", "d1")          # mrr 1.0
        run_b = _run("q1", "x", "d1")     # mrr 0.5
        assert win_tie_loss(run_a, run_b, qrels, "mrr", 10) == (1, 0, 0)
        assert win_tie_loss(run_a, run_b, qrels, "mrr", 10, epsilon=0.6) == (0, 1, 0)


class TestSweep:
    def _setup(self):
        docs = [Document("d1", "apple pie recipe"), Document("d2", "apple tree"),
                Document("d3", "pie chart data")]
        idx = build_index(iter(docs), PLAIN)
        queries = [Query("q1", "apple pie")]
        qrels = Qrels()
        qrels.add("q1", "d1", 1)
        return idx, queries, qrels

    def test_singleton_grid(self):
        idx, queries, qrels = self._setup()
        best, table = sweep(idx, queries, qrels, "bm25", [{"k1": 0.9, "b": 0.4}])
        assert best == {"k1": 0.9, "b": 0.4}
        assert len(table) == 1

    def test_known_optimal_point_selected(self):
        idx, queries, qrels = self._setup()
        grid = make_grid(k1=[0.5, 0.9], b=[0.2, 0.6])
        best, table = sweep(idx, queries, qrels, "bm25", grid, metric="mrr", metric_k=10)
        values = {tuple(sorted(p.items())): v for p, v in table}
        recheck = max(values.values())
        assert values[tuple(sorted(best.items()))] == recheck

    def test_tie_breaks_to_smallest_tuple(self):
        idx, queries, qrels = self._setup()
        # single-term query: rankings (and mrr) identical across the grid
        queries = [Query("q1", "apple")]
        qrels = Qrels()
        qrels.add("q1", "d1", 1)
        grid = make_grid(lam=[0.8, 0.2, 0.5])
        best, table = sweep(idx, queries, qrels, "ql", grid, metric="mrr")
        assert len({v for _, v in table}) == 1
        assert best == {"lam": 0.2}

    def test_empty_grid_errors(self):
        idx, queries, qrels = self._setup()
        with pytest.raises(EngineError, match="non-empty"):
            sweep(idx, queries, qrels, "bm25", [])
