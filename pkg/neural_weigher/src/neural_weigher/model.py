"""Encoder plus per-token regression head, with checkpoint save/load.

The encoder is any local or hub transformers model directory; the head is
a single linear layer learned from scratch. Checkpoints bundle the encoder,
head weights, tokenizer files, and a meta.json.
"""

from __future__ import annotations

import json
import os

import torch
from torch import nn
from transformers import AutoModel, AutoTokenizer


class TokenWeigher(nn.Module):
    def __init__(self, encoder: nn.Module):
        super().__init__()
        self.encoder = encoder
        self.head = nn.Linear(encoder.config.hidden_size, 1)

    def forward(self, input_ids: torch.Tensor, attention_mask: torch.Tensor) -> torch.Tensor:
        hidden = self.encoder(input_ids=input_ids, attention_mask=attention_mask).last_hidden_state
        return self.head(hidden).squeeze(-1)

    @classmethod
    def from_base(cls, base_path: str) -> tuple["TokenWeigher", "AutoTokenizer"]:
        """Fresh head on a saved base encoder; tokenizer loaded alongside."""
        encoder = AutoModel.from_pretrained(base_path)
        tokenizer = AutoTokenizer.from_pretrained(base_path)
        return cls(encoder), tokenizer

    def save_checkpoint(self, path: str, tokenizer, meta: dict) -> None:
        os.makedirs(path, exist_ok=True)
        self.encoder.save_pretrained(os.path.join(path, "encoder"))
        tokenizer.save_pretrained(os.path.join(path, "tokenizer"))
        torch.save(self.head.state_dict(), os.path.join(path, "head.pt"))
        with open(os.path.join(path, "meta.json"), "w", encoding="utf-8") as f:
            json.dump(meta, f, sort_keys=True, indent=2)
            f.write("\n")

    @classmethod
    def load_checkpoint(cls, path: str) -> tuple["TokenWeigher", "AutoTokenizer", dict]:
        encoder = AutoModel.from_pretrained(os.path.join(path, "encoder"))
        tokenizer = AutoTokenizer.from_pretrained(os.path.join(path, "tokenizer"))
        model = cls(encoder)
        state = torch.load(os.path.join(path, "head.pt"), map_location="cpu", weights_only=True)
        model.head.load_state_dict(state)
        with open(os.path.join(path, "meta.json"), encoding="utf-8") as f:
            meta = json.load(f)
        return model, tokenizer, meta
