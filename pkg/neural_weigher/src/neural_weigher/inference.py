"""Inference: per-word weights serialized in the termweight interchange format.

Each surface word takes the prediction at its first subword; words mapping
to the same analyzed term keep the maximum prediction. Output directory
receives weights.jsonl, meta.json (settings and truncation stats), and
alignment.json (surface word -> analyzed term).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Iterable

import torch

from termweight.analysis import AnalyzerConfig, segment

from neural_weigher.align import DEFAULT_MAX_LEN, tokenize_words, word_term
from neural_weigher.model import TokenWeigher


@dataclass
class InferStats:
    owners: int = 0
    truncated: int = 0


def predict_word_weights(
    model: TokenWeigher, tokenizer, text: str, config: AnalyzerConfig, max_len: int
) -> tuple[list[tuple[str, float]], bool]:
    """(word, prediction) per kept word, plus whether the text was truncated."""
    model.eval()
    words = segment(text)
    input_ids, first_subword, truncated = tokenize_words(words, tokenizer, max_len)
    if not first_subword:
        return [], truncated
    batch = torch.tensor([input_ids], dtype=torch.long)
    attention = torch.ones_like(batch)
    with torch.no_grad():
        pred = model(batch, attention)[0]
    kept = words[: len(first_subword)]
    return [(w, float(pred[slot])) for w, slot in zip(kept, first_subword)], truncated


def infer(
    model: TokenWeigher,
    tokenizer,
    owners: Iterable[tuple[str, str]],
    out_dir: str,
    config: AnalyzerConfig | None = None,
    max_len: int = DEFAULT_MAX_LEN,
    meta: dict | None = None,
) -> InferStats:
    """Write weight records for every (owner_id, text) pair."""
    config = config or AnalyzerConfig()
    os.makedirs(out_dir, exist_ok=True)
    stats = InferStats()
    alignment: dict[str, str] = {}
    model.eval()
    with open(os.path.join(out_dir, "weights.jsonl"), "w", encoding="utf-8") as f:
        for owner_id, text in owners:
            word_preds, truncated = predict_word_weights(model, tokenizer, text, config, max_len)
            if truncated:
                stats.truncated += 1
            weights: dict[str, float] = {}
            for word, value in word_preds:
                term = word_term(word, config)
                if term is None:
                    continue
                alignment[word] = term
                if term not in weights or value > weights[term]:
                    weights[term] = value
            record = {"id": owner_id, "weights": {t: weights[t] for t in sorted(weights)}}
            f.write(json.dumps(record, ensure_ascii=False) + "\n")
            stats.owners += 1

    with open(os.path.join(out_dir, "alignment.json"), "w", encoding="utf-8") as f:
        json.dump(alignment, f, ensure_ascii=False, sort_keys=True, indent=2)
        f.write("\n")
    payload = dict(meta or {})
    payload.update({
        "owners": stats.owners,
        "truncated": stats.truncated,
        "max_len": max_len,
    })
    with open(os.path.join(out_dir, "meta.json"), "w", encoding="utf-8") as f:
        json.dump(payload, f, sort_keys=True, indent=2)
        f.write("\n")
    return stats
