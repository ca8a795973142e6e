"""Deterministic toy corpora for tests, demos, and benchmarks.

The uplift corpus is built so that term frequency alone cannot tell which
documents a query is really about: every document mentions its two central
concepts and eight incidental ones exactly once each, and the same concept
is central in some documents but incidental in others. Centrality is
recoverable from the relevance data (and, textually, from term position:
central terms always open the document).
"""

from __future__ import annotations

import os
import random
from dataclasses import dataclass

from termweight.corpus import Document, Qrels, Query, write_collection, write_qrels, write_queries


@dataclass
class SyntheticCorpus:
    documents: list[Document]
    train_queries: list[Query]
    train_qrels: Qrels
    eval_queries: list[Query]
    eval_qrels: Qrels

    def write(self, directory: str) -> dict[str, str]:
        """Write the standard file formats; returns name -> path."""
        os.makedirs(directory, exist_ok=True)
        paths = {
            "collection": os.path.join(directory, "collection.tsv"),
            "train_queries": os.path.join(directory, "train_queries.tsv"),
            "train_qrels": os.path.join(directory, "train_qrels.txt"),
            "eval_queries": os.path.join(directory, "eval_queries.tsv"),
            "eval_qrels": os.path.join(directory, "eval_qrels.txt"),
        }
        write_collection(self.documents, paths["collection"])
        write_queries(self.train_queries, paths["train_queries"])
        write_qrels(self.train_qrels, paths["train_qrels"])
        write_queries(self.eval_queries, paths["eval_queries"])
        write_qrels(self.eval_qrels, paths["eval_qrels"])
        return paths


def build_uplift_corpus(
    seed: int = 13,
    n_docs: int = 200,
    n_concepts: int = 40,
    n_central: int = 2,
    n_distractors: int = 8,
    n_eval_queries: int = 50,
) -> SyntheticCorpus:
    """Corpus where centrality, not frequency, separates relevant documents."""
    rng = random.Random(seed)
    concepts = [f"topic{i:02d}" for i in range(n_concepts)]

    documents: list[Document] = []
    central: list[tuple[str, ...]] = []
    for i in range(n_docs):
        picked = rng.sample(concepts, n_central + n_distractors)
        central_terms = tuple(picked[:n_central])
        distractors = picked[n_central:]
        rng.shuffle(distractors)
        central.append(central_terms)
        documents.append(
            Document(external_id=f"d{i:03d}", body=" ".join(central_terms) + " " + " ".join(distractors))
        )

    def relevant_for(terms: tuple[str, ...]) -> list[int]:
        wanted = set(terms)
        return [i for i, c in enumerate(central) if wanted <= set(c)]

    train_queries: list[Query] = []
    train_qrels = Qrels()
    for i in range(n_docs):
        qid = f"tq{i:03d}"
        train_queries.append(Query(query_id=qid, text=" ".join(central[i])))
        for doc_idx in relevant_for(central[i]):
            if train_qrels.grade(qid, documents[doc_idx].external_id) == 0:
                train_qrels.add(qid, documents[doc_idx].external_id, 1)

    eval_queries: list[Query] = []
    eval_qrels = Qrels()
    eval_docs = rng.sample(range(n_docs), n_eval_queries)
    for j, doc_idx in enumerate(eval_docs):
        qid = f"eq{j:02d}"
        eval_queries.append(Query(query_id=qid, text=" ".join(central[doc_idx])))
        for rel_idx in relevant_for(central[doc_idx]):
            eval_qrels.add(qid, documents[rel_idx].external_id, 1)

    return SyntheticCorpus(documents, train_queries, train_qrels, eval_queries, eval_qrels)


def random_corpus(
    rng: random.Random,
    max_docs: int = 50,
    vocab_size: int = 30,
    max_len: int = 40,
) -> list[Document]:
    """Small random corpus for oracle-equivalence style tests."""
    vocab = [f"w{i:02d}" for i in range(vocab_size)]
    n_docs = rng.randint(1, max_docs)
    docs = []
    for i in range(n_docs):
        length = rng.randint(1, max_len)
        docs.append(
            Document(external_id=f"d{i:03d}", body=" ".join(rng.choice(vocab) for _ in range(length)))
        )
    return docs
