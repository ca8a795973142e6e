"""Collections, queries, and relevance judgments.

File formats:
  collection  TSV ``external_id<TAB>text`` or JSONL ``{"id","title","body"}``
  queries     TSV ``query_id<TAB>text``
  qrels       whitespace-separated ``qid 0 docid grade``
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator

from termweight.errors import EngineError, FormatError

COLLECTION_TSV = "tsv"
COLLECTION_JSONL = "jsonl"


def _check_id(value: str, what: str) -> str:
    if not value:
        raise EngineError(f"{what} must be non-empty")
    if any(c.isspace() for c in value):
        raise EngineError(f"{what} {value!r} must not contain whitespace")
    return value


@dataclass(frozen=True)
class Document:
    external_id: str
    body: str
    title: str | None = None

    def __post_init__(self):
        _check_id(self.external_id, "document id")
        if not self.body and not self.title:
            raise EngineError(f"document {self.external_id}: body may be empty only with a title")

    def text(self) -> str:
        """Title (when present) prepended to the body for analysis."""
        if self.title:
            return f"{self.title} {self.body}" if self.body else self.title
        return self.body


class QueryKind(str, Enum):
    TITLE = "title"
    DESCRIPTION = "description"
    NARRATIVE = "narrative"
    GENERIC = "generic"


@dataclass(frozen=True)
class Query:
    query_id: str
    text: str
    kind: QueryKind = QueryKind.GENERIC

    def __post_init__(self):
        _check_id(self.query_id, "query id")
        if not self.text:
            raise EngineError(f"query {self.query_id}: text must be non-empty")


@dataclass
class Qrels:
    """Graded relevance judgments; grade > 0 means relevant."""

    judgments: dict[str, dict[str, int]] = field(default_factory=dict)

    def add(self, query_id: str, external_id: str, grade: int) -> None:
        if grade < 0:
            raise EngineError(f"qrels grade must be >= 0, got {grade} for ({query_id}, {external_id})")
        by_doc = self.judgments.setdefault(query_id, {})
        if external_id in by_doc:
            raise EngineError(f"duplicate qrels pair ({query_id}, {external_id})")
        by_doc[external_id] = grade

    def grade(self, query_id: str, external_id: str) -> int:
        return self.judgments.get(query_id, {}).get(external_id, 0)

    def relevant_docs(self, query_id: str) -> set[str]:
        return {d for d, g in self.judgments.get(query_id, {}).items() if g > 0}

    def query_ids(self) -> list[str]:
        return list(self.judgments)

    def invert_relevant(self) -> dict[str, set[str]]:
        """Map each doc id to the set of query ids it is relevant to."""
        inv: dict[str, set[str]] = {}
        for qid, by_doc in self.judgments.items():
            for docid, grade in by_doc.items():
                if grade > 0:
                    inv.setdefault(docid, set()).add(qid)
        return inv


def load_collection(path: str, format: str = COLLECTION_TSV) -> Iterator[Document]:
    """Stream documents in file order; duplicate ids and malformed lines error."""
    if format not in (COLLECTION_TSV, COLLECTION_JSONL):
        raise EngineError(f"unknown collection format {format!r}")

    def gen() -> Iterator[Document]:
        seen: set[str] = set()
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                line = line.rstrip("\n")
                if not line:
                    continue
                try:
                    if format == COLLECTION_TSV:
                        parts = line.split("\t", 1)
                        if len(parts) != 2:
                            raise EngineError("expected external_id<TAB>text")
                        doc = Document(external_id=parts[0], body=parts[1])
                    else:
                        obj = json.loads(line)
                        if not isinstance(obj, dict) or "id" not in obj:
                            raise EngineError('expected an object with an "id" field')
                        doc = Document(
                            external_id=str(obj["id"]),
                            body=str(obj.get("body", "")),
                            title=str(obj["title"]) if obj.get("title") is not None else None,
                        )
                except (json.JSONDecodeError, EngineError) as exc:
                    raise FormatError(path, lineno, str(exc)) from exc
                if doc.external_id in seen:
                    raise FormatError(path, lineno, f"duplicate document id {doc.external_id!r}")
                seen.add(doc.external_id)
                yield doc

    return gen()


def write_collection(docs: Iterable[Document], path: str, format: str = COLLECTION_TSV) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for doc in docs:
            if format == COLLECTION_TSV:
                if doc.title:
                    raise EngineError("TSV collections cannot carry titles; use jsonl")
                if "\n" in doc.body or "\t" in doc.body:
                    raise EngineError(f"document {doc.external_id}: TSV body must not contain tab/newline")
                f.write(f"{doc.external_id}\t{doc.body}\n")
            else:
                obj = {"id": doc.external_id, "body": doc.body}
                if doc.title is not None:
                    obj["title"] = doc.title
                f.write(json.dumps(obj, ensure_ascii=False, sort_keys=True) + "\n")


def load_queries(path: str, kind: QueryKind = QueryKind.GENERIC) -> list[Query]:
    queries: list[Query] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t", 1)
            if len(parts) != 2:
                raise FormatError(path, lineno, "expected query_id<TAB>text")
            try:
                query = Query(query_id=parts[0], text=parts[1], kind=kind)
            except EngineError as exc:
                raise FormatError(path, lineno, str(exc)) from exc
            if query.query_id in seen:
                raise FormatError(path, lineno, f"duplicate query id {query.query_id!r}")
            seen.add(query.query_id)
            queries.append(query)
    return queries


def write_queries(queries: Iterable[Query], path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for q in queries:
            f.write(f"{q.query_id}\t{q.text}\n")


def load_qrels(path: str) -> Qrels:
    qrels = Qrels()
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 4:
                raise FormatError(path, lineno, "expected: qid 0 docid grade")
            qid, _, docid, grade_str = parts
            try:
                grade = int(grade_str)
            except ValueError:
                raise FormatError(path, lineno, f"grade must be an integer, got {grade_str!r}")
            try:
                qrels.add(qid, docid, grade)
            except EngineError as exc:
                raise FormatError(path, lineno, str(exc)) from exc
    return qrels


def write_qrels(qrels: Qrels, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for qid, by_doc in qrels.judgments.items():
            for docid, grade in by_doc.items():
                f.write(f"{qid} 0 {docid} {grade}\n")
