"""Vocoder training: least-squares adversarial losses, feature matching,
mel reconstruction, the single train step, and the adaptation loop.

The mel-reconstruction term compares log-mels of generated and real audio
computed with the same conventions as the feature extractor, so the
generator is pulled toward the ground-truth waveform even when it is
conditioned on mels predicted by the acoustic model.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F
from torch import Tensor, nn

from voiceclone.errors import EmptyAdaptationSet, LengthMismatch, MisalignedPair
from voiceclone.frontend.mel import LOG_FLOOR, MelConfig, mel_filterbank
from voiceclone.vocoder.discriminators import VocoderDiscriminators
from voiceclone.vocoder.generator import Generator, VocoderConfig


class TorchMel(nn.Module):
    """Differentiable log-mel analysis matching the numpy extractor."""

    def __init__(self, config: MelConfig):
        super().__init__()
        self.config = config
        self.register_buffer("window", torch.hann_window(config.win_size, periodic=True))
        self.register_buffer(
            "filterbank", torch.from_numpy(mel_filterbank(config)).to(torch.float32)
        )

    def forward(self, wave: Tensor) -> Tensor:
        """(B, N) audio to (B, T, n_mels) log-mel, T = 1 + N // hop."""
        spec = torch.stft(
            wave,
            n_fft=self.config.n_fft,
            hop_length=self.config.hop_size,
            win_length=self.config.win_size,
            window=self.window,
            center=True,
            pad_mode="reflect",
            return_complex=True,
        ).abs()
        mel = torch.matmul(self.filterbank.to(spec.dtype), spec)
        return torch.log(torch.clamp(mel, min=LOG_FLOOR)).transpose(1, 2)


@dataclass
class VocoderLossReport:
    generator_total: float
    adversarial: float
    feature_matching: float
    mel_reconstruction: float
    discriminator: float

    def as_dict(self) -> dict[str, float]:
        return {
            "gen_total": self.generator_total,
            "gen_adv": self.adversarial,
            "gen_fm": self.feature_matching,
            "gen_mel": self.mel_reconstruction,
            "disc": self.discriminator,
        }


def discriminator_loss(real_verdicts, fake_verdicts) -> Tensor:
    loss = 0.0
    for (real_score, _), (fake_score, _) in zip(real_verdicts, fake_verdicts):
        loss = loss + torch.mean((1.0 - real_score) ** 2) + torch.mean(fake_score**2)
    return loss


def adversarial_loss(fake_verdicts) -> Tensor:
    loss = 0.0
    for fake_score, _ in fake_verdicts:
        loss = loss + torch.mean((1.0 - fake_score) ** 2)
    return loss


def feature_matching_loss(real_verdicts, fake_verdicts) -> Tensor:
    loss = 0.0
    for (_, real_feats), (_, fake_feats) in zip(real_verdicts, fake_verdicts):
        for real, fake in zip(real_feats, fake_feats):
            loss = loss + F.l1_loss(fake, real.detach())
    return loss


def align_pair(samples: np.ndarray, num_frames: int, hop: int) -> np.ndarray:
    """Trim or zero-pad audio so its length is exactly num_frames * hop."""
    want = num_frames * hop
    if len(samples) >= want:
        return samples[:want]
    return np.pad(samples, (0, want - len(samples)))


def _stack_batch(
    batch: list[tuple[np.ndarray | Tensor, np.ndarray | Tensor]], hop: int
) -> tuple[Tensor, Tensor]:
    waves, mels = [], []
    for wave, mel in batch:
        wave_t = torch.as_tensor(np.asarray(wave), dtype=torch.float32)
        mel_t = torch.as_tensor(np.asarray(mel), dtype=torch.float32)
        if wave_t.shape[0] != mel_t.shape[0] * hop:
            raise MisalignedPair(
                f"waveform of {wave_t.shape[0]} samples vs {mel_t.shape[0]} frames x hop {hop}"
            )
        waves.append(wave_t)
        mels.append(mel_t)
    if len({w.shape[0] for w in waves}) != 1:
        raise MisalignedPair("pairs within a batch must share one segment length")
    return torch.stack(waves), torch.stack(mels)


def vocoder_train_step(
    generator: Generator,
    discriminators: VocoderDiscriminators,
    batch: list[tuple[np.ndarray | Tensor, np.ndarray | Tensor]],
    generator_opt: torch.optim.Optimizer,
    discriminator_opt: torch.optim.Optimizer,
    mel_analyzer: TorchMel,
) -> VocoderLossReport:
    """One discriminator update followed by one generator update.

    ``batch`` holds (waveform, mel) pairs, each waveform exactly
    ``mel frames * hop`` samples. With ``lambda_adv == 0`` the
    discriminator is left alone and only the mel term trains the
    generator.

    Raises:
        MisalignedPair: length contract violated by any pair.
    """
    config = generator.config
    real_wave, mel = _stack_batch(batch, config.hop_size)
    real_wave = real_wave.unsqueeze(1)  # (B, 1, N)

    fake_wave = generator(mel.transpose(1, 2))

    disc_loss_value = 0.0
    adv = fake_wave.new_zeros(())
    fm = fake_wave.new_zeros(())
    if config.lambda_adv > 0:
        discriminator_opt.zero_grad()
        disc_loss = discriminator_loss(
            discriminators(real_wave), discriminators(fake_wave.detach())
        )
        disc_loss.backward()
        discriminator_opt.step()
        disc_loss_value = float(disc_loss.detach())

        real_verdicts = discriminators(real_wave)
        fake_verdicts = discriminators(fake_wave)
        adv = adversarial_loss(fake_verdicts)
        fm = feature_matching_loss(real_verdicts, fake_verdicts)

    mel_fake = mel_analyzer(fake_wave.squeeze(1))
    mel_real = mel_analyzer(real_wave.squeeze(1))
    mel_loss = F.l1_loss(mel_fake, mel_real)

    gen_loss = config.lambda_adv * adv + config.lambda_fm * fm + config.lambda_mel * mel_loss
    generator_opt.zero_grad()
    gen_loss.backward()
    generator_opt.step()

    return VocoderLossReport(
        generator_total=float(gen_loss.detach()),
        adversarial=float(adv.detach()),
        feature_matching=float(fm.detach()),
        mel_reconstruction=float(mel_loss.detach()),
        discriminator=disc_loss_value,
    )


def _random_segment(
    rng: np.random.Generator, wave: np.ndarray, mel: np.ndarray, segment_frames: int, hop: int
) -> tuple[np.ndarray, np.ndarray]:
    total = mel.shape[0]
    if total <= segment_frames:
        return wave, mel
    start = int(rng.integers(0, total - segment_frames + 1))
    return (
        wave[start * hop : (start + segment_frames) * hop],
        mel[start : start + segment_frames],
    )


def train_vocoder(
    generator: Generator,
    discriminators: VocoderDiscriminators,
    pairs: list[tuple[np.ndarray, np.ndarray]],
    steps: int,
    *,
    mel_config: MelConfig | None = None,
    batch_size: int = 8,
    seed: int = 0,
    log_every: int = 50,
    log_cb=None,
) -> list[VocoderLossReport]:
    """Random-segment training loop used by stage 1 and by adaptation.

    ``pairs`` are full utterances (waveform, mel) already aligned to
    ``frames * hop`` samples; each step crops one random segment per
    sampled utterance.
    """
    config = generator.config
    mel_analyzer = TorchMel(mel_config or MelConfig(sample_rate=config.sample_rate))
    generator_opt = torch.optim.AdamW(
        generator.parameters(), lr=config.learning_rate, betas=config.adam_betas
    )
    discriminator_opt = torch.optim.AdamW(
        discriminators.parameters(), lr=config.learning_rate, betas=config.adam_betas
    )
    rng = np.random.default_rng(seed)
    generator.train()
    discriminators.train()
    reports = []
    for step in range(steps):
        picks = rng.choice(len(pairs), size=min(batch_size, len(pairs)), replace=False)
        segment = min(
            [config.segment_frames] + [pairs[i][1].shape[0] for i in picks]
        )
        batch = [
            _random_segment(rng, pairs[i][0], pairs[i][1], segment, config.hop_size)
            for i in picks
        ]
        # a shorter utterance in the batch shrinks the common segment
        batch = [(w[: segment * config.hop_size], m[:segment]) for w, m in batch]
        report = vocoder_train_step(
            generator, discriminators, batch, generator_opt, discriminator_opt, mel_analyzer
        )
        reports.append(report)
        if log_cb is not None and (step % log_every == 0 or step == steps - 1):
            log_cb(step, report)
    generator.eval()
    discriminators.eval()
    return reports


def adapt_vocoder(
    generator: Generator,
    discriminators: VocoderDiscriminators,
    gt_waveforms: list[np.ndarray],
    predicted_mels: list[np.ndarray],
    steps: int = 3000,
    *,
    mel_config: MelConfig | None = None,
    batch_size: int = 8,
    seed: int = 0,
    log_cb=None,
) -> tuple[Generator, VocoderDiscriminators, list[VocoderLossReport]]:
    """Fine-tune copies of the generator and discriminators on
    (ground-truth waveform, predicted mel) pairs.

    The inputs are left untouched; ``steps == 0`` returns identical
    copies. Discriminators adapt jointly with the generator.

    Raises:
        EmptyAdaptationSet: no pairs.
        LengthMismatch: waveform and mel counts differ.
    """
    if len(gt_waveforms) != len(predicted_mels):
        raise LengthMismatch(
            f"{len(gt_waveforms)} waveforms vs {len(predicted_mels)} predicted mels"
        )
    if not gt_waveforms:
        raise EmptyAdaptationSet("vocoder adaptation needs at least one pair")
    adapted_gen = copy.deepcopy(generator)
    adapted_disc = copy.deepcopy(discriminators)
    if steps == 0:
        return adapted_gen, adapted_disc, []
    hop = generator.config.hop_size
    pairs = [
        (align_pair(np.asarray(w, dtype=np.float32), m.shape[0], hop), np.asarray(m))
        for w, m in zip(gt_waveforms, predicted_mels)
    ]
    reports = train_vocoder(
        adapted_gen,
        adapted_disc,
        pairs,
        steps,
        mel_config=mel_config,
        batch_size=batch_size,
        seed=seed,
        log_cb=log_cb,
    )
    return adapted_gen, adapted_disc, reports
