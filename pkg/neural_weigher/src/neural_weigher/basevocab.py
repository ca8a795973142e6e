"""Build a small randomly-initialized base checkpoint from a collection.

For offline environments with no pretrained weights available: the vocab
is the collection's distinct lowercased words plus character-level pieces
for out-of-vocabulary fallback. Any hub or local BERT-style checkpoint can
be used instead when available.
"""

from __future__ import annotations

import os

import torch
from transformers import BertConfig, BertModel, BertTokenizer

from termweight.analysis import segment

SPECIALS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]


def build_vocab(texts, max_words: int = 20000) -> list[str]:
    counts: dict[str, int] = {}
    chars: set[str] = set()
    for text in texts:
        for word in segment(text):
            word = word.lower()
            counts[word] = counts.get(word, 0) + 1
            chars.update(word)
    by_freq = sorted(counts, key=lambda w: (-counts[w], w))[:max_words]
    char_pieces = sorted(chars) + [f"##{c}" for c in sorted(chars)]
    seen = set(SPECIALS)
    vocab = list(SPECIALS)
    for token in char_pieces + sorted(by_freq):
        if token not in seen:
            seen.add(token)
            vocab.append(token)
    return vocab


def init_base(
    texts,
    out_dir: str,
    hidden_size: int = 64,
    num_layers: int = 2,
    num_heads: int = 2,
    max_positions: int = 160,
    seed: int = 13,
    max_words: int = 20000,
) -> str:
    """Write vocab + random-init encoder in standard checkpoint layout."""
    os.makedirs(out_dir, exist_ok=True)
    vocab = build_vocab(texts, max_words)
    vocab_path = os.path.join(out_dir, "vocab.txt")
    with open(vocab_path, "w", encoding="utf-8") as f:
        f.write("\n".join(vocab) + "\n")
    tokenizer = BertTokenizer(vocab_path, do_lower_case=True)
    tokenizer.save_pretrained(out_dir)
    torch.manual_seed(seed)
    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=hidden_size,
        num_hidden_layers=num_layers,
        num_attention_heads=num_heads,
        intermediate_size=hidden_size * 2,
        max_position_embeddings=max_positions,
    )
    encoder = BertModel(config)
    encoder.save_pretrained(out_dir)
    return out_dir
