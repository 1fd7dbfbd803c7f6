"""Duration-conditioned autoregressive acoustic model.

Phone ids go through a convolutional + bidirectional-LSTM encoder to
phone-level features. A length regulator repeats each phone's feature row
for its duration in frames and appends two conditioning signals per frame:
a relative-position scalar (0 to 1 inside the phone) and the speaker
embedding row. The decoder then emits mel frames one step at a time: the
previous mel frame (ground truth while training, its own output at
synthesis) runs through a prenet, is joined with the previous expanded
row in one LSTM to form a context, and the context joined with the
current expanded row runs through a second LSTM and a linear projection.
A convolutional postnet adds a residual; both the pre- and post-postnet
mels are scored against ground truth with MSE.

There is no stop token: decode length is fixed by the durations.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field, replace

import numpy as np
import torch
import torch.nn.functional as F
from torch import Tensor, nn

from voiceclone.errors import (
    EmptyTargetCorpus,
    IndexOutOfVocab,
    LengthMismatch,
    ShapeMismatch,
    ZeroDuration,
)


@dataclass
class AcousticConfig:
    vocab_size: int
    speaker_count: int
    mel_dim: int = 80
    phone_embedding_dim: int = 256
    encoder_conv_layers: int = 3
    encoder_conv_channels: int = 256
    encoder_conv_kernel: int = 5
    encoder_lstm_hidden: int = 128  # per direction; encoder output is twice this
    encoder_dropout: float = 0.5
    speaker_embedding_dim: int = 64
    prenet_dims: tuple[int, ...] = (256, 256)
    prenet_dropout: float = 0.5
    prenet_dropout_at_inference: bool = True
    decoder_hidden: int = 512
    postnet_layers: int = 5
    postnet_channels: int = 256
    postnet_kernel: int = 5
    postnet_dropout: float = 0.5

    def __post_init__(self):
        if self.speaker_count < 1:
            raise ValueError("speaker_count must be >= 1")
        if self.mel_dim < 1:
            raise ValueError("mel_dim must be positive")

    @property
    def encoder_output_dim(self) -> int:
        return 2 * self.encoder_lstm_hidden

    @property
    def expanded_dim(self) -> int:
        # encoder features ++ position scalar ++ speaker embedding
        return self.encoder_output_dim + 1 + self.speaker_embedding_dim


@dataclass
class MelPrediction:
    before_postnet: Tensor
    after_postnet: Tensor


class Encoder(nn.Module):
    """Phone embedding -> conv stack -> bidirectional LSTM."""

    def __init__(self, config: AcousticConfig):
        super().__init__()
        self.embedding = nn.Embedding(config.vocab_size, config.phone_embedding_dim)
        convs = []
        in_channels = config.phone_embedding_dim
        for _ in range(config.encoder_conv_layers):
            convs.append(
                nn.Sequential(
                    nn.Conv1d(
                        in_channels,
                        config.encoder_conv_channels,
                        config.encoder_conv_kernel,
                        padding=(config.encoder_conv_kernel - 1) // 2,
                    ),
                    nn.BatchNorm1d(config.encoder_conv_channels),
                )
            )
            in_channels = config.encoder_conv_channels
        self.convs = nn.ModuleList(convs)
        self.dropout = config.encoder_dropout
        self.lstm = nn.LSTM(
            in_channels, config.encoder_lstm_hidden, batch_first=True, bidirectional=True
        )

    def forward(self, phone_ids: Tensor) -> Tensor:
        x = self.embedding(phone_ids).transpose(1, 2)  # (B, C, L)
        for conv in self.convs:
            x = F.dropout(F.relu(conv(x)), self.dropout, training=self.training)
        outputs, _ = self.lstm(x.transpose(1, 2))
        return outputs  # (B, L, E)


class Prenet(nn.Module):
    """Feedback bottleneck whose dropout can stay active at synthesis.

    Dropout uses an explicit mask so a seeded generator can make
    synthesis reproducible.
    """

    def __init__(self, in_dim: int, dims: tuple[int, ...], dropout: float, always_on: bool):
        super().__init__()
        sizes = [in_dim, *dims]
        self.layers = nn.ModuleList(
            nn.Linear(a, b, bias=False) for a, b in zip(sizes[:-1], sizes[1:])
        )
        self.dropout = dropout
        self.always_on = always_on

    def forward(self, x: Tensor, generator: torch.Generator | None = None) -> Tensor:
        for layer in self.layers:
            x = F.relu(layer(x))
            if self.dropout > 0 and (self.training or self.always_on):
                keep = 1.0 - self.dropout
                mask = (
                    torch.rand(x.shape, generator=generator, device=x.device, dtype=x.dtype)
                    < keep
                )
                x = x * mask.to(x.dtype) / keep
        return x


class Postnet(nn.Module):
    """Convolutional refinement stack producing a residual over the mel."""

    def __init__(self, config: AcousticConfig):
        super().__init__()
        channels = [config.mel_dim] + [config.postnet_channels] * (config.postnet_layers - 1)
        channels += [config.mel_dim]
        pad = (config.postnet_kernel - 1) // 2
        self.convs = nn.ModuleList(
            nn.Sequential(
                nn.Conv1d(c_in, c_out, config.postnet_kernel, padding=pad),
                nn.BatchNorm1d(c_out),
            )
            for c_in, c_out in zip(channels[:-1], channels[1:])
        )
        self.dropout = config.postnet_dropout

    def forward(self, mel: Tensor) -> Tensor:
        x = mel.transpose(1, 2)  # (B, mel_dim, T)
        for i, conv in enumerate(self.convs):
            x = conv(x)
            if i < len(self.convs) - 1:
                x = torch.tanh(x)
            x = F.dropout(x, self.dropout, training=self.training)
        return x.transpose(1, 2)


class Decoder(nn.Module):
    """Two stacked LSTM cells stepped frame by frame.

    The same step function serves teacher forcing and free running, so
    the two modes are identical whenever they see identical feedback.
    """

    def __init__(self, config: AcousticConfig):
        super().__init__()
        self.config = config
        self.prenet = Prenet(
            config.mel_dim,
            config.prenet_dims,
            config.prenet_dropout,
            config.prenet_dropout_at_inference,
        )
        prenet_out = config.prenet_dims[-1]
        self.context_cell = nn.LSTMCell(prenet_out + config.expanded_dim, config.decoder_hidden)
        self.output_cell = nn.LSTMCell(
            config.decoder_hidden + config.expanded_dim, config.decoder_hidden
        )
        self.mel_projection = nn.Linear(config.decoder_hidden, config.mel_dim)

    def _step(self, prev_mel, prev_row, cur_row, state, generator):
        pre = self.prenet(prev_mel, generator)
        h1, c1 = self.context_cell(torch.cat([pre, prev_row], dim=-1), state[0])
        h2, c2 = self.output_cell(torch.cat([h1, cur_row], dim=-1), state[1])
        frame = self.mel_projection(h2)
        return frame, ((h1, c1), (h2, c2))

    def decode(
        self,
        expanded: Tensor,
        feedback: Tensor | None,
        generator: torch.Generator | None = None,
    ) -> Tensor:
        """Emit one mel frame per expanded row.

        ``feedback`` supplies the previous-frame input (teacher forcing);
        when None the decoder feeds back its own previous output. Step 0
        sees a zero frame and a zero previous row either way.
        """
        batch, total, _ = expanded.shape
        dtype, device = expanded.dtype, expanded.device
        prev_mel = torch.zeros(batch, self.config.mel_dim, dtype=dtype, device=device)
        prev_row = torch.zeros(batch, expanded.shape[2], dtype=dtype, device=device)
        state = (None, None)
        frames = []
        for t in range(total):
            frame, state = self._step(prev_mel, prev_row, expanded[:, t], state, generator)
            frames.append(frame)
            prev_row = expanded[:, t]
            prev_mel = feedback[:, t] if feedback is not None else frame
        return torch.stack(frames, dim=1)


class AcousticModel(nn.Module):
    def __init__(self, config: AcousticConfig):
        super().__init__()
        self.config = config
        self.encoder = Encoder(config)
        self.decoder = Decoder(config)
        self.postnet = Postnet(config)
        self.speaker_table = nn.Embedding(config.speaker_count, config.speaker_embedding_dim)

    # --- encoding -------------------------------------------------------

    def encode(self, phone_ids: Tensor) -> Tensor:
        """Phone-level encoder outputs: (L, E) for (L,) input, batched alike.

        Raises:
            IndexOutOfVocab: any id outside [0, vocab_size).
        """
        squeeze = phone_ids.dim() == 1
        if squeeze:
            phone_ids = phone_ids.unsqueeze(0)
        if phone_ids.numel() and (
            int(phone_ids.min()) < 0 or int(phone_ids.max()) >= self.config.vocab_size
        ):
            raise IndexOutOfVocab(f"phone id outside [0, {self.config.vocab_size})")
        outputs = self.encoder(phone_ids)
        return outputs.squeeze(0) if squeeze else outputs

    def speaker_vector(self, speaker_id: int) -> Tensor:
        if not 0 <= speaker_id < self.speaker_table.num_embeddings:
            raise IndexOutOfVocab(
                f"speaker {speaker_id} outside [0, {self.speaker_table.num_embeddings})"
            )
        return self.speaker_table.weight[speaker_id]

    # --- decoding -------------------------------------------------------

    def teacher_forced_forward(self, expanded: Tensor, mel_gt: Tensor) -> MelPrediction:
        """Decode with ground-truth feedback; returns mels before and after postnet.

        Accepts (T, D) with (T, mel_dim) or batched (B, T, D) inputs.

        Raises:
            LengthMismatch: expanded and mel frame counts differ.
        """
        squeeze = expanded.dim() == 2
        if squeeze:
            expanded, mel_gt = expanded.unsqueeze(0), mel_gt.unsqueeze(0)
        if expanded.shape[1] != mel_gt.shape[1]:
            raise LengthMismatch(
                f"expanded has {expanded.shape[1]} frames, mel has {mel_gt.shape[1]}"
            )
        before = self.decoder.decode(expanded, feedback=mel_gt)
        after = before + self.postnet(before)
        if squeeze:
            before, after = before.squeeze(0), after.squeeze(0)
        return MelPrediction(before, after)

    def autoregressive_synthesize(
        self,
        expanded: Tensor,
        generator: torch.Generator | None = None,
        feedback_override: Tensor | None = None,
    ) -> Tensor:
        """Free-running decode; emits exactly one frame per expanded row.

        ``feedback_override`` replaces the model's own feedback with the
        given frames, which makes this path comparable with teacher
        forcing in diagnostics.
        """
        squeeze = expanded.dim() == 2
        if squeeze:
            expanded = expanded.unsqueeze(0)
            if feedback_override is not None:
                feedback_override = feedback_override.unsqueeze(0)
        before = self.decoder.decode(expanded, feedback=feedback_override, generator=generator)
        after = before + self.postnet(before)
        return after.squeeze(0) if squeeze else after

    # --- speakers -------------------------------------------------------

    def add_speaker(self) -> int:
        """Append one speaker row initialized to the mean of existing rows.

        Only the adaptation procedure should call this. Returns the new
        speaker id.
        """
        weight = self.speaker_table.weight.data
        new_row = weight.mean(dim=0, keepdim=True)
        table = nn.Embedding(weight.shape[0] + 1, weight.shape[1])
        table.weight.data = torch.cat([weight, new_row], dim=0)
        table.to(weight.device, weight.dtype)
        self.speaker_table = table
        self.config = replace(self.config, speaker_count=weight.shape[0] + 1)
        return weight.shape[0]


def length_regulate(
    encoder_outputs: Tensor,
    durations: Tensor | np.ndarray | list[int],
    speaker_vec: Tensor,
) -> Tensor:
    """Expand phone-level features to frame level.

    Row i is repeated ``durations[i]`` times. Each frame gains a relative
    position scalar, ``j / (d - 1)`` for frame j of a d-frame phone (0 for
    single-frame phones), and the speaker vector.

    Returns a (sum(durations), E + 1 + S) tensor.

    Raises:
        LengthMismatch: durations length differs from phone count.
        ZeroDuration: any duration < 1.
    """
    durations = torch.as_tensor(np.asarray(durations), dtype=torch.long)
    if durations.dim() != 1 or durations.shape[0] != encoder_outputs.shape[0]:
        raise LengthMismatch(
            f"{encoder_outputs.shape[0]} phones vs {tuple(durations.shape)} durations"
        )
    if durations.numel() == 0:
        return encoder_outputs.new_zeros((0, encoder_outputs.shape[1] + 1 + speaker_vec.shape[0]))
    if int(durations.min()) < 1:
        raise ZeroDuration("every phone needs at least one frame")

    expanded = torch.repeat_interleave(encoder_outputs, durations, dim=0)
    dtype, device = encoder_outputs.dtype, encoder_outputs.device
    position_chunks = [
        torch.zeros(1, dtype=dtype, device=device)
        if d == 1
        else torch.linspace(0.0, 1.0, int(d), dtype=dtype, device=device)
        for d in durations.tolist()
    ]
    positions = torch.cat(position_chunks).unsqueeze(1)
    speakers = speaker_vec.to(dtype).unsqueeze(0).expand(expanded.shape[0], -1)
    return torch.cat([expanded, positions, speakers], dim=1)


def acoustic_loss(pred: MelPrediction, mel_gt: Tensor, mask: Tensor | None = None) -> Tensor:
    """MSE(before, gt) + MSE(after, gt), optionally masked over padded frames.

    ``mask`` is (B, T) with 1 on real frames; without it every frame counts.

    Raises:
        ShapeMismatch: prediction and ground-truth shapes differ.
    """
    if pred.before_postnet.shape != mel_gt.shape or pred.after_postnet.shape != mel_gt.shape:
        raise ShapeMismatch(
            f"prediction {tuple(pred.before_postnet.shape)} vs target {tuple(mel_gt.shape)}"
        )
    if mask is None:
        return F.mse_loss(pred.before_postnet, mel_gt) + F.mse_loss(pred.after_postnet, mel_gt)
    weights = mask.to(mel_gt.dtype).unsqueeze(-1)
    denom = weights.sum() * mel_gt.shape[-1]
    loss_before = (weights * (pred.before_postnet - mel_gt) ** 2).sum() / denom
    loss_after = (weights * (pred.after_postnet - mel_gt) ** 2).sum() / denom
    return loss_before + loss_after


@dataclass
class AcousticExample:
    """One training item: phones, their frame counts, the target mel."""

    phone_ids: np.ndarray  # (L,) int64
    durations: np.ndarray  # (L,) int64
    mel: np.ndarray  # (T, mel_dim) float32, T == durations.sum()
    speaker_id: int


@dataclass
class AdaptationResult:
    model: "AcousticModel"
    speaker_id: int | None
    losses: list[float] = field(default_factory=list)


def _batch_forward(model: AcousticModel, batch: list[AcousticExample]):
    """Teacher-forced loss over a padded batch."""
    expanded_rows = []
    for ex in batch:
        enc = model.encode(torch.from_numpy(ex.phone_ids))
        spk = model.speaker_vector(ex.speaker_id)
        expanded_rows.append(length_regulate(enc, ex.durations, spk))
    lengths = [e.shape[0] for e in expanded_rows]
    t_max = max(lengths)
    dtype = expanded_rows[0].dtype
    expanded = torch.zeros(len(batch), t_max, expanded_rows[0].shape[1], dtype=dtype)
    mel_gt = torch.zeros(len(batch), t_max, model.config.mel_dim, dtype=dtype)
    mask = torch.zeros(len(batch), t_max)
    for i, (rows, ex) in enumerate(zip(expanded_rows, batch)):
        expanded[i, : lengths[i]] = rows
        mel_gt[i, : lengths[i]] = torch.from_numpy(ex.mel).to(dtype)
        mask[i, : lengths[i]] = 1.0
    pred = model.teacher_forced_forward(expanded, mel_gt)
    return acoustic_loss(pred, mel_gt, mask)


def train_acoustic(
    model: AcousticModel,
    examples: list[AcousticExample],
    steps: int,
    *,
    batch_size: int = 8,
    learning_rate: float = 1e-3,
    final_lr_fraction: float = 0.1,
    seed: int = 0,
    log_every: int = 50,
    log_cb=None,
) -> list[float]:
    """Teacher-forced training; returns the per-step loss history.

    The learning rate decays exponentially to ``learning_rate *
    final_lr_fraction`` over the run (1.0 keeps it constant).
    """
    if not examples:
        raise EmptyTargetCorpus("no acoustic training examples")
    optimizer = torch.optim.Adam(model.parameters(), lr=learning_rate)
    gamma = final_lr_fraction ** (1.0 / max(steps, 1))
    scheduler = torch.optim.lr_scheduler.ExponentialLR(optimizer, gamma=gamma)
    rng = np.random.default_rng(seed)
    model.train()
    losses = []
    for step in range(steps):
        picks = rng.choice(len(examples), size=min(batch_size, len(examples)), replace=False)
        loss = _batch_forward(model, [examples[i] for i in picks])
        optimizer.zero_grad()
        loss.backward()
        torch.nn.utils.clip_grad_norm_(model.parameters(), 1.0)
        optimizer.step()
        scheduler.step()
        losses.append(float(loss.detach()))
        if log_cb is not None and (step % log_every == 0 or step == steps - 1):
            log_cb(step, float(loss.detach()))
    model.eval()
    return losses


def evaluate_acoustic(model: AcousticModel, examples: list[AcousticExample]) -> float:
    """Mean teacher-forced loss over a set, without parameter updates."""
    was_training = model.training
    model.eval()
    with torch.no_grad():
        total = sum(float(_batch_forward(model, [ex])) for ex in examples)
    model.train(was_training)
    return total / len(examples)


def adapt_acoustic(
    model: AcousticModel,
    target_examples: list[AcousticExample],
    steps: int = 3000,
    *,
    batch_size: int = 8,
    learning_rate: float = 1e-4,
    seed: int = 0,
    log_cb=None,
) -> AdaptationResult:
    """Fine-tune a copy of the model on a target speaker's utterances.

    A fresh speaker row (mean of existing rows) is appended and all
    parameters train for exactly ``steps`` optimization steps. The input
    model is left untouched; ``steps == 0`` returns an identical copy
    with no new row.

    Raises:
        EmptyTargetCorpus: no target utterances.
    """
    if not target_examples:
        raise EmptyTargetCorpus("adaptation needs at least one target utterance")
    adapted = copy.deepcopy(model)
    if steps == 0:
        adapted.eval()
        return AdaptationResult(adapted, None)
    speaker_id = adapted.add_speaker()
    retargeted = [
        replace(ex, speaker_id=speaker_id) if ex.speaker_id != speaker_id else ex
        for ex in target_examples
    ]
    losses = train_acoustic(
        adapted,
        retargeted,
        steps,
        batch_size=batch_size,
        learning_rate=learning_rate,
        seed=seed,
        log_cb=log_cb,
    )
    return AdaptationResult(adapted, speaker_id, losses)


def teacher_forced_mels(
    model: AcousticModel,
    examples: list[AcousticExample],
    generator: torch.Generator | None = None,
) -> list[np.ndarray]:
    """After-postnet mels decoded with ground-truth feedback.

    These align frame-exactly with the source audio, which is what the
    vocoder adaptation pairs require.
    """
    was_training = model.training
    model.eval()
    outputs = []
    with torch.no_grad():
        for ex in examples:
            enc = model.encode(torch.from_numpy(ex.phone_ids))
            spk = model.speaker_vector(ex.speaker_id)
            expanded = length_regulate(enc, ex.durations, spk)
            mel_gt = torch.from_numpy(ex.mel).to(expanded.dtype)
            before = model.decoder.decode(
                expanded.unsqueeze(0), feedback=mel_gt.unsqueeze(0), generator=generator
            )
            after = before + model.postnet(before)
            outputs.append(after.squeeze(0).cpu().numpy().astype(np.float32))
    model.train(was_training)
    return outputs
