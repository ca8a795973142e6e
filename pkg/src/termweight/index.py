"""Inverted indexes with integer per-posting weights.

A posting's weight is either the plain term frequency or a learned weight
scaled to an integer; postings that would round to zero are simply never
stored, so low-importance terms vanish from the index. Document length,
collection frequency, and avgdl are all derived from the stored weights so
BM25/QL need no special cases for weighted indexes.

On-disk layout (one directory): meta.txt (key=value), lexicon.tsv
(term df ctf offset len), docs.tsv (ordinal external_id dl), postings.bin
(per-term blocks of LEB128 varints), checksums.txt (CRC32 per file).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from termweight.analysis import STEM_NONE, STEM_PORTER, AnalyzerConfig, analyze
from termweight.codec import crc32_hex, read_uvarint, write_uvarint
from termweight.corpus import Document
from termweight.errors import EngineError, IndexFormatError
from termweight.parallel import parallel_map
from termweight.targets import WeightRecord

MAGIC = "termweight-index"
VERSION = 1

MODE_TF = "tf"
MODE_WEIGHTED = "weighted"

FALLBACK_STRICT = "strict"
FALLBACK_DROP_DOC = "drop_doc"
FALLBACK_USE_TF = "use_tf"

DEFAULT_SCALE = 100

_SEGMENTS = ("meta.txt", "lexicon.tsv", "docs.tsv", "postings.bin")


@dataclass
class Posting:
    doc: int
    weight: int
    positions: list[int] | None = None


@dataclass
class DocEntry:
    external_id: str
    dl: int


@dataclass
class IndexMeta:
    doc_count: int
    total_weight: int
    analyzer: AnalyzerConfig
    weighted: bool
    scale_n: int
    positional: bool

    @property
    def avgdl(self) -> float:
        return self.total_weight / self.doc_count if self.doc_count else 0.0


class InvertedIndex:
    """Immutable in-memory index; safe to share across threads once built."""

    def __init__(self, meta: IndexMeta, docs: list[DocEntry], postings: dict[str, list[Posting]]):
        self.meta = meta
        self.docs = docs
        self.postings = postings

    def get_postings(self, term: str) -> list[Posting] | None:
        return self.postings.get(term)

    def df(self, term: str) -> int:
        pl = self.postings.get(term)
        return len(pl) if pl else 0

    def ctf(self, term: str) -> int:
        pl = self.postings.get(term)
        return sum(p.weight for p in pl) if pl else 0

    def external_id(self, ordinal: int) -> str:
        return self.docs[ordinal].external_id

    def doc_weights(self) -> list[list[int]]:
        """Per-document list of stored weights (doc-major view of the postings)."""
        per_doc: list[list[int]] = [[] for _ in self.docs]
        for pl in self.postings.values():
            for p in pl:
                per_doc[p.doc].append(p.weight)
        return per_doc


def scale_weight(y_hat: float, n: int) -> int | None:
    """Scale a predicted weight to an integer; None means the term is dropped.

    Rounds half away from zero. Negative predictions and anything rounding
    to zero are discarded.
    """
    if n < 1:
        raise EngineError(f"scale factor must be >= 1, got {n}")
    if not math.isfinite(y_hat):
        raise EngineError(f"cannot scale non-finite weight {y_hat!r}")
    if y_hat < 0:
        return None
    scaled = math.floor(y_hat * n + 0.5)
    return scaled if scaled >= 1 else None


def build_index(
    docs: Iterable[Document],
    config: AnalyzerConfig | None = None,
    mode: str = MODE_TF,
    weight_source: Mapping[str, WeightRecord] | None = None,
    scale_n: int = DEFAULT_SCALE,
    positional: bool = False,
    fallback: str = FALLBACK_STRICT,
    threads: int = 1,
) -> InvertedIndex:
    """Build an index whose weights are tf or scaled learned weights.

    Analysis runs on a worker pool; the merge is single-threaded in document
    order, so output is independent of ``threads``.
    """
    config = config or AnalyzerConfig()
    if mode not in (MODE_TF, MODE_WEIGHTED):
        raise EngineError(f"unknown index mode {mode!r}")
    if fallback not in (FALLBACK_STRICT, FALLBACK_DROP_DOC, FALLBACK_USE_TF):
        raise EngineError(f"unknown fallback policy {fallback!r}")
    if mode == MODE_WEIGHTED and weight_source is None:
        raise EngineError("weighted mode requires a weight source")

    postings: dict[str, list[Posting]] = {}
    doc_table: list[DocEntry] = []
    seen_ids: set[str] = set()
    total_weight = 0

    def analyzed(doc: Document) -> tuple[Document, list[str]]:
        return doc, analyze(doc.text(), config)

    for doc, terms in parallel_map(analyzed, docs, threads):
        if doc.external_id in seen_ids:
            raise EngineError(f"duplicate document id {doc.external_id!r}")
        seen_ids.add(doc.external_id)
        ordinal = len(doc_table)

        occurrences: dict[str, list[int]] = {}
        for pos, term in enumerate(terms):
            occurrences.setdefault(term, []).append(pos)

        record = None
        use_tf_for_all = mode == MODE_TF
        if mode == MODE_WEIGHTED:
            record = weight_source.get(doc.external_id)
            if record is None:
                if fallback == FALLBACK_STRICT:
                    raise EngineError(f"no weight record for document {doc.external_id!r}")
                if fallback == FALLBACK_USE_TF:
                    use_tf_for_all = True
                else:
                    occurrences = {}

        dl = 0
        for term in sorted(occurrences):
            pos_list = occurrences[term]
            if use_tf_for_all:
                weight: int | None = len(pos_list)
            else:
                y_hat = record.weights.get(term)
                if y_hat is None:
                    weight = len(pos_list) if fallback == FALLBACK_USE_TF else None
                else:
                    weight = scale_weight(y_hat, scale_n)
            if weight is None or weight < 1:
                continue
            dl += weight
            postings.setdefault(term, []).append(
                Posting(ordinal, weight, list(pos_list) if positional else None)
            )
        total_weight += dl
        doc_table.append(DocEntry(doc.external_id, dl))

    meta = IndexMeta(
        doc_count=len(doc_table),
        total_weight=total_weight,
        analyzer=config,
        weighted=mode == MODE_WEIGHTED,
        scale_n=scale_n if mode == MODE_WEIGHTED else 0,
        positional=positional,
    )
    return InvertedIndex(meta, doc_table, postings)


def weight_rank_profile(index: InvertedIndex, top_k: int) -> list[float]:
    """Mean share of document weight captured by each weight rank.

    Entry i is the mean over documents of (i-th largest term weight / dl);
    documents with fewer than i terms contribute 0 at rank i, and dl=0
    documents are skipped entirely.
    """
    if top_k < 1:
        raise EngineError(f"top_k must be >= 1, got {top_k}")
    profile = [0.0] * top_k
    scorable = 0
    for entry, weights in zip(index.docs, index.doc_weights()):
        if entry.dl == 0:
            continue
        scorable += 1
        weights.sort(reverse=True)
        for i, w in enumerate(weights[:top_k]):
            profile[i] += w / entry.dl
    if scorable == 0:
        raise EngineError("cannot profile an index with no scorable documents")
    return [v / scorable for v in profile]


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def _encode_postings(pl: list[Posting], positional: bool) -> bytes:
    buf = bytearray()
    prev_doc = 0
    for i, p in enumerate(pl):
        write_uvarint(buf, p.doc if i == 0 else p.doc - prev_doc)
        prev_doc = p.doc
        write_uvarint(buf, p.weight)
        if positional:
            positions = p.positions or []
            write_uvarint(buf, len(positions))
            prev_pos = 0
            for j, pos in enumerate(positions):
                write_uvarint(buf, pos if j == 0 else pos - prev_pos)
                prev_pos = pos
    return bytes(buf)


def _decode_postings(data: memoryview, df: int, positional: bool) -> list[Posting]:
    pl: list[Posting] = []
    pos = 0
    doc = 0
    for i in range(df):
        delta, pos = read_uvarint(data, pos)
        doc = delta if i == 0 else doc + delta
        weight, pos = read_uvarint(data, pos)
        positions = None
        if positional:
            count, pos = read_uvarint(data, pos)
            positions = []
            cur = 0
            for j in range(count):
                pdelta, pos = read_uvarint(data, pos)
                cur = pdelta if j == 0 else cur + pdelta
                positions.append(cur)
        pl.append(Posting(doc, weight, positions))
    if pos != len(data):
        raise IndexFormatError("trailing bytes in postings block")
    return pl


def _meta_lines(meta: IndexMeta) -> list[str]:
    lines = [
        f"magic={MAGIC}",
        f"version={VERSION}",
        f"doc_count={meta.doc_count}",
        f"total_weight={meta.total_weight}",
        f"avgdl={meta.avgdl!r}",
        f"weighted={'true' if meta.weighted else 'false'}",
        f"scale_n={meta.scale_n}",
        f"positional={'true' if meta.positional else 'false'}",
        f"analyzer.lowercase={'true' if meta.analyzer.lowercase else 'false'}",
        f"analyzer.stem={meta.analyzer.stem}",
    ]
    if meta.analyzer.stopwords is not None:
        lines.append("analyzer.stopwords=" + ",".join(sorted(meta.analyzer.stopwords)))
    return lines


def _parse_meta(text: str, path: str) -> IndexMeta:
    kv: dict[str, str] = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        if "=" not in line:
            raise IndexFormatError(f"{path}: bad meta line {line!r}")
        key, value = line.split("=", 1)
        kv[key] = value
    if kv.get("magic") != MAGIC:
        raise IndexFormatError(f"{path}: not a termweight index (magic={kv.get('magic')!r})")
    if kv.get("version") != str(VERSION):
        raise IndexFormatError(f"{path}: unsupported index version {kv.get('version')!r}")
    stopwords = None
    if "analyzer.stopwords" in kv:
        raw = kv["analyzer.stopwords"]
        stopwords = frozenset(raw.split(",")) if raw else frozenset()
    analyzer = AnalyzerConfig(
        lowercase=kv["analyzer.lowercase"] == "true",
        stem=kv["analyzer.stem"],
        stopwords=stopwords,
    )
    return IndexMeta(
        doc_count=int(kv["doc_count"]),
        total_weight=int(kv["total_weight"]),
        analyzer=analyzer,
        weighted=kv["weighted"] == "true",
        scale_n=int(kv["scale_n"]),
        positional=kv["positional"] == "true",
    )


def persist(index: InvertedIndex, path: str) -> None:
    """Write the five-file directory layout; deterministic byte-for-byte."""
    os.makedirs(path, exist_ok=True)
    postings_buf = bytearray()
    lexicon_lines: list[str] = []
    for term in sorted(index.postings):
        pl = index.postings[term]
        block = _encode_postings(pl, index.meta.positional)
        offset = len(postings_buf)
        postings_buf.extend(block)
        ctf = sum(p.weight for p in pl)
        lexicon_lines.append(f"{term}\t{len(pl)}\t{ctf}\t{offset}\t{len(block)}")

    files = {
        "meta.txt": ("\n".join(_meta_lines(index.meta)) + "\n").encode("utf-8"),
        "lexicon.tsv": ("".join(line + "\n" for line in lexicon_lines)).encode("utf-8"),
        "docs.tsv": (
            "".join(f"{i}\t{d.external_id}\t{d.dl}\n" for i, d in enumerate(index.docs))
        ).encode("utf-8"),
        "postings.bin": bytes(postings_buf),
    }
    for name, data in files.items():
        with open(os.path.join(path, name), "wb") as f:
            f.write(data)
    with open(os.path.join(path, "checksums.txt"), "w", encoding="utf-8") as f:
        for name in _SEGMENTS:
            f.write(f"{name} {crc32_hex(files[name])}\n")


def load(path: str) -> InvertedIndex:
    """Load a persisted index, verifying checksums and lexicon consistency."""
    data: dict[str, bytes] = {}
    for name in _SEGMENTS:
        file_path = os.path.join(path, name)
        if not os.path.exists(file_path):
            raise IndexFormatError(f"{path}: missing index segment {name}")
        with open(file_path, "rb") as f:
            data[name] = f.read()

    checksum_path = os.path.join(path, "checksums.txt")
    if not os.path.exists(checksum_path):
        raise IndexFormatError(f"{path}: missing checksums.txt")
    with open(checksum_path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            name, expected = line.split()
            if name not in data:
                raise IndexFormatError(f"{path}: checksum for unknown segment {name!r}")
            actual = crc32_hex(data[name])
            if actual != expected:
                raise IndexFormatError(f"{path}: checksum mismatch for {name} ({actual} != {expected})")

    meta = _parse_meta(data["meta.txt"].decode("utf-8"), path)

    docs: list[DocEntry] = []
    for line in data["docs.tsv"].decode("utf-8").splitlines():
        ordinal_str, external_id, dl_str = line.split("\t")
        if int(ordinal_str) != len(docs):
            raise IndexFormatError(f"{path}: doc table ordinals out of order at {ordinal_str}")
        docs.append(DocEntry(external_id, int(dl_str)))
    if len(docs) != meta.doc_count:
        raise IndexFormatError(f"{path}: doc table has {len(docs)} rows, meta says {meta.doc_count}")

    postings: dict[str, list[Posting]] = {}
    blob = memoryview(data["postings.bin"])
    for line in data["lexicon.tsv"].decode("utf-8").splitlines():
        term, df_str, ctf_str, offset_str, len_str = line.split("\t")
        df, ctf = int(df_str), int(ctf_str)
        offset, length = int(offset_str), int(len_str)
        if offset + length > len(blob):
            raise IndexFormatError(f"{path}: postings block for {term!r} out of range")
        pl = _decode_postings(blob[offset : offset + length], df, meta.positional)
        if sum(p.weight for p in pl) != ctf:
            raise IndexFormatError(f"{path}: ctf mismatch for term {term!r}")
        postings[term] = pl

    return InvertedIndex(meta, docs, postings)
