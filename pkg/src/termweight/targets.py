"""Ground-truth term importance from relevance data.

For a document, a term's target is the fraction of the document's relevant
queries that mention the term. For a query, it is the fraction of the
query's relevant documents that mention the term. Both live in [0, 1] by
construction and are computed over analyzed terms, with stopword removal
disabled so stopwords still receive targets.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator, TextIO

from termweight.analysis import AnalyzerConfig, analyze
from termweight.corpus import Document, Qrels, Query
from termweight.errors import EngineError, FormatError


@dataclass
class TermTargets:
    """Target weights for one owner (document or query) with its support size."""

    owner_id: str
    weights: dict[str, float]
    support: int

    def __post_init__(self):
        if self.support < 1:
            raise EngineError(f"targets for {self.owner_id}: support must be >= 1")
        for term, w in self.weights.items():
            if not 0.0 <= w <= 1.0:
                raise EngineError(f"targets for {self.owner_id}: weight {w} for {term!r} outside [0,1]")


@dataclass
class WeightRecord:
    """Real-valued term weights for one owner; negatives allowed on input."""

    owner_id: str
    weights: dict[str, float]

    def __post_init__(self):
        if not self.owner_id:
            raise EngineError("weight record owner_id must be non-empty")


def compute_qtr(
    qrels: Qrels,
    queries: Iterable[Query],
    docs: Iterable[Document],
    config: AnalyzerConfig | None = None,
) -> Iterator[TermTargets]:
    """Per-document query term recall targets.

    Yields one TermTargets per document with at least one relevant query,
    covering every distinct analyzed term of the document (terms in no
    relevant query get 0). Documents never judged relevant are omitted.
    """
    config = (config or AnalyzerConfig()).without_stopwords()
    query_terms = {q.query_id: set(analyze(q.text, config)) for q in queries}
    missing = [qid for qid in qrels.query_ids() if qid not in query_terms]
    if missing:
        raise EngineError(f"qrels reference unknown query ids: {sorted(missing)[:5]}")
    relevant_by_doc = qrels.invert_relevant()

    def gen() -> Iterator[TermTargets]:
        seen: set[str] = set()
        for doc in docs:
            seen.add(doc.external_id)
            rel_queries = relevant_by_doc.get(doc.external_id)
            if not rel_queries:
                continue
            support = len(rel_queries)
            weights: dict[str, float] = {}
            for term in analyze(doc.text(), config):
                if term in weights:
                    continue
                count = sum(1 for qid in rel_queries if term in query_terms[qid])
                weights[term] = count / support
            yield TermTargets(doc.external_id, weights, support)
        unseen = set(relevant_by_doc) - seen
        if unseen:
            raise EngineError(f"qrels reference docs missing from collection: {sorted(unseen)[:5]}")

    return gen()


def compute_tr(
    qrels: Qrels,
    queries: Iterable[Query],
    docs: Iterable[Document],
    config: AnalyzerConfig | None = None,
) -> Iterator[TermTargets]:
    """Per-query term recall targets.

    Yields one TermTargets per query with at least one relevant document,
    covering every distinct analyzed query term. Membership is tested on
    each relevant document's analyzed term set.
    """
    config = (config or AnalyzerConfig()).without_stopwords()
    queries = list(queries)
    query_terms = {q.query_id: analyze(q.text, config) for q in queries}
    missing = [qid for qid in qrels.query_ids() if qid not in query_terms]
    if missing:
        raise EngineError(f"qrels reference unknown query ids: {sorted(missing)[:5]}")
    rel_docs = {qid: qrels.relevant_docs(qid) for qid in query_terms}
    doc_to_qids: dict[str, list[str]] = {}
    for qid, docs_of_q in rel_docs.items():
        for docid in docs_of_q:
            doc_to_qids.setdefault(docid, []).append(qid)

    def gen() -> Iterator[TermTargets]:
        doc_contains: dict[str, dict[str, int]] = {qid: {} for qid in query_terms}
        seen: set[str] = set()
        for doc in docs:
            qids = doc_to_qids.get(doc.external_id)
            if not qids:
                continue
            seen.add(doc.external_id)
            terms = set(analyze(doc.text(), config))
            for qid in qids:
                counts = doc_contains[qid]
                for term in query_terms[qid]:
                    if term in terms:
                        counts[term] = counts.get(term, 0) + 1
        unseen = set(doc_to_qids) - seen
        if unseen:
            raise EngineError(f"qrels reference docs missing from collection: {sorted(unseen)[:5]}")
        for query in queries:
            qid = query.query_id
            support = len(rel_docs[qid])
            if support == 0:
                continue
            counts = doc_contains[qid]
            weights = {term: counts.get(term, 0) / support for term in query_terms[qid]}
            yield TermTargets(qid, weights, support)

    return gen()


def format_weight(x: float) -> str:
    """Decimal with 9 significant digits; plain notation for |x| in [1e-4, 1e9)."""
    return f"{x:.9g}"


def _write_record(f: TextIO, owner_id: str, weights: dict[str, float]) -> None:
    pairs = ", ".join(
        f"{json.dumps(term, ensure_ascii=False)}: {format_weight(w)}"
        for term, w in sorted(weights.items())
    )
    f.write(f'{{"id": {json.dumps(owner_id, ensure_ascii=False)}, "weights": {{{pairs}}}}}\n')


def write_weights(records: Iterable[WeightRecord | TermTargets], path: str) -> int:
    """Write one JSON object per owner; returns the number of records written.

    TermTargets are accepted and serialized as plain weight records (the
    support count is not part of the interchange format).
    """
    n = 0
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            _write_record(f, rec.owner_id, rec.weights)
            n += 1
    return n


def read_weights(path: str) -> Iterator[WeightRecord]:
    """Stream weight records; malformed lines and duplicate owners error."""

    def gen() -> Iterator[WeightRecord]:
        seen: set[str] = set()
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise FormatError(path, lineno, f"bad JSON: {exc.msg}") from exc
                if not isinstance(obj, dict) or "id" not in obj or "weights" not in obj:
                    raise FormatError(path, lineno, 'expected {"id": ..., "weights": {...}}')
                owner_id = str(obj["id"])
                raw = obj["weights"]
                if not isinstance(raw, dict):
                    raise FormatError(path, lineno, '"weights" must be an object')
                weights: dict[str, float] = {}
                for term, w in raw.items():
                    if not isinstance(w, (int, float)) or isinstance(w, bool):
                        raise FormatError(path, lineno, f"weight for {term!r} is not a number")
                    weights[term] = float(w)
                if owner_id in seen:
                    raise FormatError(path, lineno, f"duplicate owner id {owner_id!r}")
                seen.add(owner_id)
                yield WeightRecord(owner_id, weights)

    return gen()
