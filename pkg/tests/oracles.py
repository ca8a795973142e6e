"""Independent brute-force reference implementations for the test suite.

Everything here recomputes results from first principles with plain loops,
deliberately sharing no code paths with the engine's scorers, index
traversal, or gradient math.
"""

from __future__ import annotations

import math
from collections import Counter


def naive_dot(w, f) -> float:
    total = 0.0
    for a, b in zip(w, f):
        total += a * b
    return total


def central_difference_gradient(loss_fn, w, b, h=1e-6):
    """Gradient of loss_fn(w, b) by central finite differences."""
    grad_w = []
    for i in range(len(w)):
        up = list(w)
        down = list(w)
        up[i] += h
        down[i] -= h
        grad_w.append((loss_fn(up, b) - loss_fn(down, b)) / (2 * h))
    grad_b = (loss_fn(list(w), b + h) - loss_fn(list(w), b - h)) / (2 * h)
    return grad_w, grad_b


class BruteForceCorpus:
    """Per-document weight maps plus the statistics both scorers need.

    ``weighted_docs`` is a list of (external_id, {term: integer weight}).
    Documents whose map is empty still count toward N but can never match.
    """

    def __init__(self, weighted_docs):
        self.docs = weighted_docs
        self.n_docs = len(weighted_docs)
        self.dl = {ext: sum(w.values()) for ext, w in weighted_docs}
        self.total = sum(self.dl.values())
        self.df = Counter()
        self.ctf = Counter()
        for _, w in weighted_docs:
            for term, weight in w.items():
                if weight >= 1:
                    self.df[term] += 1
                    self.ctf[term] += weight
        self.avgdl = self.total / self.n_docs if self.n_docs else 0.0

    @classmethod
    def from_term_lists(cls, docs):
        """Plain tf corpus from (external_id, [terms]) pairs."""
        return cls([(ext, dict(Counter(terms))) for ext, terms in docs])


def _rank(scores, k):
    ordered = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))[:k]
    return [(ext, score, rank) for rank, (ext, score) in enumerate(ordered, 1)]


def brute_force_bm25(corpus: BruteForceCorpus, query_weights, k, k1, b):
    """Score every document that matches at least one query term."""
    total_qw = sum(w for _, w in query_weights)
    scores = {}
    for ext, doc_weights in corpus.docs:
        score = 0.0
        matched = False
        for term, qw in query_weights:
            w = doc_weights.get(term, 0)
            if w < 1:
                continue
            matched = True
            idf = math.log(1.0 + (corpus.n_docs - corpus.df[term] + 0.5) / (corpus.df[term] + 0.5))
            dl = corpus.dl[ext]
            score += (qw / total_qw) * idf * (w * (k1 + 1.0)) / (w + k1 * (1.0 - b + b * dl / corpus.avgdl))
        if matched:
            scores[ext] = score
    return _rank(scores, k)


def brute_force_ql(corpus: BruteForceCorpus, query_weights, k, lam):
    """Jelinek-Mercer query likelihood, skipping collection-unseen terms."""
    total_qw = sum(w for _, w in query_weights)
    kept = [(t, qw) for t, qw in query_weights if corpus.ctf.get(t, 0) > 0]
    scores = {}
    for ext, doc_weights in corpus.docs:
        if not any(doc_weights.get(t, 0) >= 1 for t, _ in kept):
            continue
        dl = corpus.dl[ext]
        score = 0.0
        for term, qw in kept:
            w = doc_weights.get(term, 0)
            p = (1.0 - lam) * (w / dl) + lam * (corpus.ctf[term] / corpus.total)
            score += (qw / total_qw) * math.log(p)
        scores[ext] = score
    return _rank(scores, k)


def count_ordered(positions1, positions2) -> int:
    count = 0
    for p in positions1:
        for q in positions2:
            if q == p + 1:
                count += 1
    return count


def count_window(positions1, positions2, window) -> int:
    count = 0
    for p in positions1:
        for q in positions2:
            if p != q and abs(p - q) < window:
                count += 1
    return count


def recount_qtr(rel_query_terms: list[set[str]], doc_terms: list[str]) -> dict[str, float]:
    """Eq.-style recount: fraction of relevant queries containing each doc term."""
    out = {}
    for term in doc_terms:
        hits = 0
        for qterms in rel_query_terms:
            if term in qterms:
                hits += 1
        out[term] = hits / len(rel_query_terms)
    return out
