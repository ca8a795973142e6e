"""Subword alignment between target weight files and tokenizer output.

Each surface word carries its target on the first subword; continuation
subwords (and [CLS]/[SEP]) are masked out of the loss. Sequences are
truncated at whole-word boundaries to the configured maximum length.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from termweight.analysis import AnalyzerConfig, analyze, segment
from termweight.targets import WeightRecord

logger = logging.getLogger(__name__)

DEFAULT_MAX_LEN = 128


@dataclass
class AlignedExample:
    owner_id: str
    input_ids: list[int]
    targets: list[float]
    loss_mask: list[float]
    words: list[str]
    first_subword: list[int]


@dataclass
class PrepareStats:
    examples: int = 0
    dropped_unalignable: int = 0
    truncated: int = 0
    words_without_target: int = 0

    def as_dict(self) -> dict:
        return {
            "examples": self.examples,
            "dropped_unalignable": self.dropped_unalignable,
            "truncated": self.truncated,
            "words_without_target": self.words_without_target,
        }


def word_term(word: str, config: AnalyzerConfig) -> str | None:
    """The analyzed term a surface word maps to, if it survives analysis."""
    terms = analyze(word, config)
    return terms[0] if terms else None


def tokenize_words(
    words: list[str], tokenizer, max_len: int
) -> tuple[list[int], list[int], bool]:
    """Subword ids with [CLS]/[SEP], plus each kept word's first-subword slot.

    Truncation happens at word boundaries: a word whose pieces do not fit
    within max_len (leaving room for [SEP]) ends the sequence.
    """
    input_ids = [tokenizer.cls_token_id]
    first_subword: list[int] = []
    truncated = False
    for word in words:
        pieces = tokenizer.tokenize(word) or [tokenizer.unk_token]
        ids = tokenizer.convert_tokens_to_ids(pieces)
        if len(input_ids) + len(ids) + 1 > max_len:
            truncated = True
            break
        first_subword.append(len(input_ids))
        input_ids.extend(ids)
    input_ids.append(tokenizer.sep_token_id)
    return input_ids, first_subword, truncated


def prepare(
    records: Iterable[WeightRecord],
    texts: Mapping[str, str],
    tokenizer,
    config: AnalyzerConfig | None = None,
    max_len: int = DEFAULT_MAX_LEN,
) -> tuple[list[AlignedExample], PrepareStats]:
    """Align target weights to subword sequences.

    A record whose target terms cannot all be located among the text's
    analyzed words is dropped (counted and logged). Words without a target
    are kept but fully masked.
    """
    config = config or AnalyzerConfig()
    examples: list[AlignedExample] = []
    stats = PrepareStats()
    for record in records:
        if record.owner_id not in texts:
            raise KeyError(f"no text for target owner {record.owner_id!r}")
        words = segment(texts[record.owner_id])
        terms = [word_term(w, config) for w in words]
        present = {t for t in terms if t is not None}
        missing = set(record.weights) - present
        if missing:
            stats.dropped_unalignable += 1
            logger.warning(
                "dropping %s: %d target terms not locatable (e.g. %s)",
                record.owner_id, len(missing), sorted(missing)[0],
            )
            continue

        input_ids, first_subword, truncated = tokenize_words(words, tokenizer, max_len)
        if truncated:
            stats.truncated += 1
        targets = [0.0] * len(input_ids)
        mask = [0.0] * len(input_ids)
        kept_words: list[str] = []
        kept_slots: list[int] = []
        for word, term, slot in zip(words, terms, first_subword):
            kept_words.append(word)
            kept_slots.append(slot)
            target = record.weights.get(term) if term is not None else None
            if target is None:
                stats.words_without_target += 1
                continue
            targets[slot] = float(target)
            mask[slot] = 1.0
        examples.append(
            AlignedExample(
                owner_id=record.owner_id,
                input_ids=input_ids,
                targets=targets,
                loss_mask=mask,
                words=kept_words,
                first_subword=kept_slots,
            )
        )
        stats.examples += 1
    if stats.dropped_unalignable:
        logger.warning("dropped %d unalignable examples", stats.dropped_unalignable)
    return examples, stats
