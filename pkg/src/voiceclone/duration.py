"""Log-domain phone duration predictor.

Embedding -> bidirectional LSTM -> linear, one log(frames) value per
phone. Trained on ground-truth (phone sequence, frame counts) pairs with
MSE in the log domain; speaker-independent by construction (no speaker
input) and frozen after the multi-speaker training stage.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
from torch import Tensor, nn

from voiceclone.errors import IndexOutOfVocab, LengthMismatch


@dataclass
class DurationModelConfig:
    vocab_size: int
    embedding_dim: int = 256
    recurrent_hidden: int = 512  # per direction
    min_frames: int = 1

    def __post_init__(self):
        if min(self.vocab_size, self.embedding_dim, self.recurrent_hidden) <= 0:
            raise ValueError("all duration model dimensions must be positive")
        if self.min_frames < 1:
            raise ValueError("min_frames must be >= 1")


class DurationPredictor(nn.Module):
    """Predicts per-phone log durations from phone id sequences."""

    def __init__(self, config: DurationModelConfig):
        super().__init__()
        self.config = config
        self.embedding = nn.Embedding(config.vocab_size, config.embedding_dim)
        self.lstm = nn.LSTM(
            config.embedding_dim,
            config.recurrent_hidden,
            batch_first=True,
            bidirectional=True,
        )
        self.projection = nn.Linear(2 * config.recurrent_hidden, 1)

    def forward(self, phone_ids: Tensor) -> Tensor:
        """Log durations for a (L,) or (B, L) id tensor, same leading shape.

        Raises:
            IndexOutOfVocab: any id outside [0, vocab_size).
        """
        squeeze = phone_ids.dim() == 1
        if squeeze:
            phone_ids = phone_ids.unsqueeze(0)
        if phone_ids.numel() > 0 and (
            int(phone_ids.min()) < 0 or int(phone_ids.max()) >= self.config.vocab_size
        ):
            raise IndexOutOfVocab(
                f"phone ids must be in [0, {self.config.vocab_size}), got "
                f"[{int(phone_ids.min())}, {int(phone_ids.max())}]"
            )
        if phone_ids.shape[1] == 0:
            out = phone_ids.new_zeros((phone_ids.shape[0], 0), dtype=self.projection.weight.dtype)
            return out.squeeze(0) if squeeze else out
        hidden, _ = self.lstm(self.embedding(phone_ids))
        log_durations = self.projection(hidden).squeeze(-1)
        return log_durations.squeeze(0) if squeeze else log_durations


def duration_loss(predicted: Tensor, target_frames: Tensor) -> Tensor:
    """Mean squared error between predictions and log target frame counts.

    Raises:
        LengthMismatch: the two sequences differ in length.
    """
    if predicted.shape != target_frames.shape:
        raise LengthMismatch(
            f"predicted {tuple(predicted.shape)} vs targets {tuple(target_frames.shape)}"
        )
    target = torch.log(target_frames.to(predicted.dtype))
    return torch.mean((predicted - target) ** 2)


def train_duration(
    model: DurationPredictor,
    examples: list[tuple[np.ndarray, np.ndarray]],
    steps: int,
    *,
    batch_size: int = 16,
    learning_rate: float = 1e-3,
    seed: int = 0,
    log_every: int = 50,
    log_cb=None,
) -> list[float]:
    """Train on (phone ids, frame counts) pairs; returns per-step losses.

    Sequences in a batch keep their own lengths (no padding), so the loss
    is the mean of per-sequence log-domain MSE values.
    """
    if not examples:
        raise ValueError("no duration training examples")
    optimizer = torch.optim.Adam(model.parameters(), lr=learning_rate)
    rng = np.random.default_rng(seed)
    model.train()
    losses = []
    for step in range(steps):
        picks = rng.choice(len(examples), size=min(batch_size, len(examples)), replace=False)
        batch_losses = []
        for i in picks:
            ids, frames = examples[i]
            predicted = model(torch.from_numpy(ids))
            batch_losses.append(duration_loss(predicted, torch.from_numpy(frames)))
        loss = torch.stack(batch_losses).mean()
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()
        losses.append(float(loss.detach()))
        if log_cb is not None and (step % log_every == 0 or step == steps - 1):
            log_cb(step, float(loss.detach()))
    model.eval()
    return losses


@torch.no_grad()
def predict_durations(model: DurationPredictor, phone_ids: Tensor | list[int]) -> np.ndarray:
    """Integer frame counts: exp of the forward output, rounded, clamped.

    Returns an int64 array with every count >= the configured minimum.
    """
    was_training = model.training
    model.eval()
    try:
        ids = torch.as_tensor(phone_ids, dtype=torch.long)
        log_durations = model(ids)
    finally:
        model.train(was_training)
    frames = torch.round(torch.exp(log_durations.to(torch.float64)))
    frames = torch.clamp(frames, min=float(model.config.min_frames))
    return frames.cpu().numpy().astype(np.int64)
