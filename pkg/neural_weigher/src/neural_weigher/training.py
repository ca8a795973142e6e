"""Fine-tuning loop for the per-token regression task."""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch

from neural_weigher import TrainingError
from neural_weigher.align import AlignedExample
from neural_weigher.model import TokenWeigher


@dataclass
class TrainSettings:
    learning_rate: float = 2e-5
    epochs: int = 3
    batch_size: int = 16
    seed: int = 13


def collate(examples: list[AlignedExample], pad_id: int) -> tuple[torch.Tensor, ...]:
    width = max(len(e.input_ids) for e in examples)

    def pad_to(values, fill):
        return [list(v) + [fill] * (width - len(v)) for v in values]

    input_ids = torch.tensor(pad_to([e.input_ids for e in examples], pad_id), dtype=torch.long)
    attention = torch.tensor(
        pad_to([[1] * len(e.input_ids) for e in examples], 0), dtype=torch.long
    )
    targets = torch.tensor(pad_to([e.targets for e in examples], 0.0), dtype=torch.float32)
    mask = torch.tensor(pad_to([e.loss_mask for e in examples], 0.0), dtype=torch.float32)
    return input_ids, attention, targets, mask


def masked_mse(pred: torch.Tensor, targets: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    """Squared error over unmasked positions only, averaged over their count."""
    count = mask.sum()
    if count.item() == 0:
        raise TrainingError("batch has no unmasked positions")
    return ((pred - targets) ** 2 * mask).sum() / count


def train(
    model: TokenWeigher,
    examples: list[AlignedExample],
    pad_id: int,
    settings: TrainSettings | None = None,
) -> list[float]:
    """Fine-tune end to end; returns the mean masked loss per epoch."""
    settings = settings or TrainSettings()
    if not examples:
        raise TrainingError("training requires at least one example")
    if settings.epochs < 1:
        raise TrainingError(f"epochs must be >= 1, got {settings.epochs}")

    torch.manual_seed(settings.seed)
    # The head is learned from scratch: (re)initialize it under the training
    # seed so fixed-seed runs are reproducible regardless of ambient RNG state.
    model.head.reset_parameters()
    optimizer = torch.optim.AdamW(model.parameters(), lr=settings.learning_rate)
    generator = torch.Generator().manual_seed(settings.seed)
    history: list[float] = []
    model.train()
    for epoch in range(settings.epochs):
        order = torch.randperm(len(examples), generator=generator).tolist()
        total = 0.0
        weight = 0.0
        for step, start in enumerate(range(0, len(order), settings.batch_size)):
            batch = [examples[i] for i in order[start : start + settings.batch_size]]
            input_ids, attention, targets, mask = collate(batch, pad_id)
            pred = model(input_ids, attention)
            loss = masked_mse(pred, targets, mask)
            value = float(loss.item())
            if not math.isfinite(value):
                raise TrainingError(f"non-finite loss at epoch {epoch}, step {step}")
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            n = float(mask.sum().item())
            total += value * n
            weight += n
        history.append(total / weight)
    return history


def initial_loss(model: TokenWeigher, examples: list[AlignedExample], pad_id: int) -> float:
    """Mean masked loss of the current parameters, without training."""
    if not examples:
        raise TrainingError("loss requires at least one example")
    model.eval()
    total = 0.0
    weight = 0.0
    with torch.no_grad():
        for start in range(0, len(examples), 32):
            batch = examples[start : start + 32]
            input_ids, attention, targets, mask = collate(batch, pad_id)
            loss = masked_mse(model(input_ids, attention), targets, mask)
            n = float(mask.sum().item())
            total += float(loss.item()) * n
            weight += n
    model.train()
    return total / weight
