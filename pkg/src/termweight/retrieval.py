"""Ranked retrieval over inverted indexes.

BM25 uses the Lucene-style idf ln(1 + (N - df + 0.5)/(df + 0.5)); query
likelihood uses Jelinek-Mercer interpolation with the collection model.
Query weights are normalized to sum 1, so rankings are invariant under
positive scaling of the weights. Top-k selection is a bounded heap over a
document-at-a-time traversal with ties broken by ascending external id.
Only documents matching at least one indexed query term are retrievable.
"""

from __future__ import annotations

import heapq
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from termweight.analysis import AnalyzerConfig, analyze
from termweight.corpus import Query
from termweight.errors import EngineError, FormatError, UnsatisfiableQueryError
from termweight.index import InvertedIndex, Posting
from termweight.targets import WeightRecord

logger = logging.getLogger(__name__)

DEFAULT_K1 = 0.9
DEFAULT_B = 0.4
DEFAULT_LAMBDA = 0.4
DEFAULT_K = 1000

SDM_DEFAULT_MIX = (0.85, 0.10, 0.05)
SDM_DEFAULT_WINDOW = 8


@dataclass(frozen=True)
class WeightedQuery:
    """Bag of (term, weight > 0); duplicate terms merge by summing weights."""

    terms: tuple[tuple[str, float], ...]

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, float]]) -> "WeightedQuery":
        merged: dict[str, float] = {}
        for term, weight in pairs:
            merged[term] = merged.get(term, 0.0) + weight
        for term, weight in merged.items():
            if not weight > 0:
                raise EngineError(f"query term {term!r} has non-positive weight {weight}")
        return cls(terms=tuple(merged.items()))

    @classmethod
    def uniform(cls, terms: Sequence[str]) -> "WeightedQuery":
        if not terms:
            raise UnsatisfiableQueryError("query has no terms")
        return cls.from_pairs((t, 1.0) for t in terms)


@dataclass(frozen=True)
class SDMQuery:
    unigrams: WeightedQuery
    ordered_bigrams: tuple[tuple[tuple[str, str], float], ...]
    unordered_pairs: tuple[tuple[tuple[str, str], float, int], ...]
    mix: tuple[float, float, float]

    def __post_init__(self):
        if any(m < 0 for m in self.mix):
            raise EngineError("SDM mix components must be >= 0")
        if abs(sum(self.mix) - 1.0) > 1e-9:
            raise EngineError(f"SDM mix must sum to 1, got {self.mix}")


@dataclass(frozen=True)
class ScoredDoc:
    external_id: str
    score: float
    rank: int


Run = dict[str, list[ScoredDoc]]


def make_weighted_query(
    query: Query, record: WeightRecord, config: AnalyzerConfig | None = None
) -> WeightedQuery:
    """Pair analyzed query terms with predicted weights.

    Non-positive weights are discarded silently; terms with no prediction
    are dropped with a warning. Dropping everything is an error.
    """
    terms = analyze(query.text, config)
    pairs: list[tuple[str, float]] = []
    missing: list[str] = []
    for term in terms:
        weight = record.weights.get(term)
        if weight is None:
            missing.append(term)
        elif weight > 0:
            pairs.append((term, weight))
    if missing:
        logger.warning("query %s: no weight for terms %s; dropped", query.query_id, sorted(set(missing)))
    if not pairs:
        raise UnsatisfiableQueryError(f"query {query.query_id}: every term was dropped")
    return WeightedQuery.from_pairs(pairs)


def make_sdm_query(
    query: Query,
    record: WeightRecord | None = None,
    config: AnalyzerConfig | None = None,
    mix: tuple[float, float, float] = SDM_DEFAULT_MIX,
    window: int = SDM_DEFAULT_WINDOW,
) -> SDMQuery:
    """Unigrams plus adjacent bigrams, ordered and unordered within a window."""
    if window < 2:
        raise EngineError(f"SDM window must be >= 2, got {window}")
    terms = analyze(query.text, config)
    if record is not None:
        unigrams = make_weighted_query(query, record, config)
    else:
        unigrams = WeightedQuery.uniform(terms)
    bigrams: dict[tuple[str, str], float] = {}
    for a, b in zip(terms, terms[1:]):
        bigrams[(a, b)] = bigrams.get((a, b), 0.0) + 1.0
    return SDMQuery(
        unigrams=unigrams,
        ordered_bigrams=tuple(bigrams.items()),
        unordered_pairs=tuple((pair, w, window) for pair, w in bigrams.items()),
        mix=mix,
    )


# ---------------------------------------------------------------------------
# Document-at-a-time traversal and top-k selection
# ---------------------------------------------------------------------------


def _daat(posting_lists: Sequence[list[Posting]]) -> Iterator[tuple[int, list[tuple[int, Posting]]]]:
    """Merge postings by doc ordinal; yields (ordinal, [(list_idx, posting)])."""
    heap: list[tuple[int, int, int]] = []
    for li, pl in enumerate(posting_lists):
        if pl:
            heap.append((pl[0].doc, li, 0))
    heapq.heapify(heap)
    while heap:
        doc = heap[0][0]
        matches: list[tuple[int, Posting]] = []
        while heap and heap[0][0] == doc:
            _, li, pi = heapq.heappop(heap)
            matches.append((li, posting_lists[li][pi]))
            if pi + 1 < len(posting_lists[li]):
                heapq.heappush(heap, (posting_lists[li][pi + 1].doc, li, pi + 1))
        yield doc, matches


class _RevStr(str):
    """Reversed ordering, so the heap root is the worst kept candidate."""

    __slots__ = ()

    def __lt__(self, other):
        return str.__gt__(self, other)

    def __gt__(self, other):
        return str.__lt__(self, other)

    def __le__(self, other):
        return str.__ge__(self, other)

    def __ge__(self, other):
        return str.__le__(self, other)


class _TopK:
    """Bounded min-heap keeping the k best (score desc, external_id asc)."""

    def __init__(self, k: int):
        self.k = k
        self._heap: list[tuple[float, _RevStr]] = []

    def offer(self, score: float, external_id: str) -> None:
        entry = (score, _RevStr(external_id))
        if len(self._heap) < self.k:
            heapq.heappush(self._heap, entry)
        elif entry > self._heap[0]:
            heapq.heapreplace(self._heap, entry)

    def ranked(self) -> list[ScoredDoc]:
        ordered = sorted(self._heap, key=lambda e: (-e[0], str(e[1])))
        return [ScoredDoc(str(ext), score, rank) for rank, (score, ext) in enumerate(ordered, 1)]


def _normalized(query: WeightedQuery) -> list[tuple[str, float]]:
    if not query.terms:
        raise UnsatisfiableQueryError("query has no terms")
    total = sum(w for _, w in query.terms)
    return [(t, w / total) for t, w in query.terms]


def bm25_search(
    index: InvertedIndex,
    query: WeightedQuery,
    k: int = DEFAULT_K,
    k1: float = DEFAULT_K1,
    b: float = DEFAULT_B,
) -> list[ScoredDoc]:
    if k < 1:
        raise EngineError(f"k must be >= 1, got {k}")
    if k1 < 0:
        raise EngineError(f"k1 must be >= 0, got {k1}")
    if not 0 <= b <= 1:
        raise EngineError(f"b must be in [0, 1], got {b}")
    weights = _normalized(query)
    n_docs = index.meta.doc_count
    avgdl = index.meta.avgdl

    lists: list[list[Posting]] = []
    factors: list[float] = []
    for term, qw in weights:
        pl = index.get_postings(term)
        if not pl:
            continue
        idf = math.log(1.0 + (n_docs - len(pl) + 0.5) / (len(pl) + 0.5))
        lists.append(pl)
        factors.append(qw * idf)

    top = _TopK(k)
    for ordinal, matches in _daat(lists):
        dl = index.docs[ordinal].dl
        norm = k1 * (1.0 - b + b * dl / avgdl)
        score = 0.0
        for li, posting in matches:
            w = posting.weight
            score += factors[li] * (w * (k1 + 1.0)) / (w + norm)
        top.offer(score, index.docs[ordinal].external_id)
    return top.ranked()


def ql_search(
    index: InvertedIndex,
    query: WeightedQuery,
    k: int = DEFAULT_K,
    lam: float = DEFAULT_LAMBDA,
) -> list[ScoredDoc]:
    if k < 1:
        raise EngineError(f"k must be >= 1, got {k}")
    if not 0 < lam < 1:
        raise EngineError(f"lambda must be in (0, 1), got {lam}")
    weights = _normalized(query)
    total_weight = index.meta.total_weight

    # Terms unseen in the collection (ctf = 0) are skipped entirely rather
    # than scored at -inf; every candidate gets the collection part of the
    # remaining terms, so only the matched increments vary per document.
    lists: list[list[Posting]] = []
    qws: list[float] = []
    p_colls: list[float] = []
    base = 0.0
    for term, qw in weights:
        pl = index.get_postings(term)
        if not pl:
            continue
        ctf = sum(p.weight for p in pl)
        p_coll = lam * ctf / total_weight
        lists.append(pl)
        qws.append(qw)
        p_colls.append(p_coll)
        base += qw * math.log(p_coll)

    top = _TopK(k)
    for ordinal, matches in _daat(lists):
        dl = index.docs[ordinal].dl
        score = base
        for li, posting in matches:
            full = (1.0 - lam) * posting.weight / dl + p_colls[li]
            score += qws[li] * (math.log(full) - math.log(p_colls[li]))
        top.offer(score, index.docs[ordinal].external_id)
    return top.ranked()


# ---------------------------------------------------------------------------
# Sequential dependency execution (QL over virtual terms)
# ---------------------------------------------------------------------------


def _ordered_matches(p1: list[int], p2: list[int]) -> int:
    """Occurrences of term1 immediately followed by term2."""
    next_set = set(p2)
    return sum(1 for p in p1 if p + 1 in next_set)


def _window_matches(p1: list[int], p2: list[int], window: int) -> int:
    """Position pairs of the two terms (any order) closer than ``window``."""
    count = 0
    for a in p1:
        for b in p2:
            if a != b and abs(a - b) < window:
                count += 1
    return count


def _virtual_postings(
    index: InvertedIndex, pair: tuple[str, str], counter, *extra
) -> list[tuple[int, int]]:
    """Per-doc match counts for a virtual term; empty when either term is absent."""
    pl1 = index.get_postings(pair[0])
    pl2 = index.get_postings(pair[1])
    if not pl1 or not pl2:
        return []
    by_doc = {p.doc: p.positions for p in pl2}
    out: list[tuple[int, int]] = []
    for p in pl1:
        positions2 = by_doc.get(p.doc)
        if positions2 is None:
            continue
        n = counter(p.positions, positions2, *extra)
        if n > 0:
            out.append((p.doc, n))
    return out


def sdm_search(
    index: InvertedIndex,
    query: SDMQuery,
    k: int = DEFAULT_K,
    lam: float = DEFAULT_LAMBDA,
) -> list[ScoredDoc]:
    """Mix of unigram QL with ordered-adjacent and within-window components.

    Virtual terms score exactly like index terms under Jelinek-Mercer, with
    the match count as tf and the corpus-wide match count as ctf.
    """
    if not index.meta.positional:
        raise EngineError("SDM execution requires a positional index")
    if k < 1:
        raise EngineError(f"k must be >= 1, got {k}")
    if not 0 < lam < 1:
        raise EngineError(f"lambda must be in (0, 1), got {lam}")
    total_weight = index.meta.total_weight
    lam_t, lam_o, lam_u = query.mix

    # component -> (per-doc increments, base)
    def component(virtuals: list[tuple[float, list[tuple[int, int]]]]) -> tuple[dict[int, float], float]:
        total_qw = sum(qw for qw, _ in virtuals)
        scores: dict[int, float] = {}
        base = 0.0
        for qw, postings in virtuals:
            if not postings:
                continue
            ctf = sum(n for _, n in postings)
            p_coll = lam * ctf / total_weight
            base += (qw / total_qw) * math.log(p_coll)
            for doc, n in postings:
                dl = index.docs[doc].dl
                full = (1.0 - lam) * n / dl + p_coll
                delta = (qw / total_qw) * (math.log(full) - math.log(p_coll))
                scores[doc] = scores.get(doc, 0.0) + delta
        return scores, base

    uni_virtuals = [
        (qw, [(p.doc, p.weight) for p in (index.get_postings(term) or [])])
        for term, qw in _normalized(query.unigrams)
    ]
    uni_scores, uni_base = component(uni_virtuals)

    ord_virtuals = [
        (qw, _virtual_postings(index, pair, _ordered_matches))
        for pair, qw in query.ordered_bigrams
    ]
    ord_scores, ord_base = component(ord_virtuals) if ord_virtuals else ({}, 0.0)

    win_virtuals = [
        (qw, _virtual_postings(index, pair, _window_matches, window))
        for pair, qw, window in query.unordered_pairs
    ]
    win_scores, win_base = component(win_virtuals) if win_virtuals else ({}, 0.0)

    candidates = set(uni_scores) | set(ord_scores) | set(win_scores)
    top = _TopK(k)
    for doc in sorted(candidates):
        score = (
            lam_t * (uni_base + uni_scores.get(doc, 0.0))
            + lam_o * (ord_base + ord_scores.get(doc, 0.0))
            + lam_u * (win_base + win_scores.get(doc, 0.0))
        )
        top.offer(score, index.docs[doc].external_id)
    return top.ranked()


# ---------------------------------------------------------------------------
# Run files: ``qid Q0 external_id rank score tag``
# ---------------------------------------------------------------------------


def write_run(run: Run, path: str, tag: str) -> None:
    if not tag or any(c.isspace() for c in tag):
        raise EngineError(f"run tag {tag!r} must be non-empty without whitespace")
    with open(path, "w", encoding="utf-8") as f:
        for qid, ranked in run.items():
            for doc in ranked:
                f.write(f"{qid} Q0 {doc.external_id} {doc.rank} {doc.score:.6f} {tag}\n")


def read_run(path: str) -> Run:
    run: Run = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 6:
                raise FormatError(path, lineno, "expected: qid Q0 docid rank score tag")
            qid, _, docid, rank_str, score_str, _ = parts
            try:
                rank, score = int(rank_str), float(score_str)
            except ValueError:
                raise FormatError(path, lineno, "rank must be int and score float")
            ranked = run.setdefault(qid, [])
            if rank != len(ranked) + 1:
                raise FormatError(path, lineno, f"ranks must be contiguous from 1, got {rank}")
            ranked.append(ScoredDoc(docid, score, rank))
    return run


def export_candidates(run: Run, depth: int, tag: str, path: str) -> None:
    """Write the run truncated to ``depth`` results per query."""
    if depth < 1:
        raise EngineError(f"depth must be >= 1, got {depth}")
    truncated = {qid: ranked[:depth] for qid, ranked in run.items()}
    write_run(truncated, path, tag)
