"""Mel-to-waveform generator.

Fully convolutional: an input conv, a chain of transposed-conv upsampling
stages whose factors multiply to exactly the hop size, each followed by a
multi-receptive-field fusion block (parallel residual stacks with
different kernel sizes, averaged), and a tanh output conv. Output length
is exactly ``input frames * hop size`` for every input length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F
from torch import Tensor, nn
from torch.nn.utils.parametrizations import weight_norm

from voiceclone.frontend.audio import Waveform
from voiceclone.frontend.mel import MelSpectrogram

LRELU_SLOPE = 0.1


@dataclass
class VocoderConfig:
    mel_dim: int = 80
    hop_size: int = 256
    sample_rate: int = 22050
    upsample_factors: tuple[int, ...] = (8, 8, 2, 2)
    base_channels: int = 128
    resblock_kernel_sizes: tuple[int, ...] = (3, 7, 11)
    resblock_dilations: tuple[tuple[int, ...], ...] = ((1, 3, 5), (1, 3, 5), (1, 3, 5))
    mpd_periods: tuple[int, ...] = (2, 3, 5, 7, 11)
    msd_scales: int = 3
    disc_base_channels: int = 16
    disc_max_channels: int = 128
    # loss recipe inherited from adversarial mel-vocoder practice, not a
    # quantity this system's description fixes
    lambda_adv: float = 1.0
    lambda_fm: float = 2.0
    lambda_mel: float = 45.0
    segment_frames: int = 32
    learning_rate: float = 2e-4
    adam_betas: tuple[float, float] = (0.8, 0.99)

    def __post_init__(self):
        if math.prod(self.upsample_factors) != self.hop_size:
            raise ValueError(
                f"upsample factors {self.upsample_factors} multiply to "
                f"{math.prod(self.upsample_factors)}, need hop size {self.hop_size}"
            )
        if len(set(self.mpd_periods)) != len(self.mpd_periods):
            raise ValueError("discriminator periods must be pairwise distinct")
        if len(self.resblock_dilations) != len(self.resblock_kernel_sizes):
            raise ValueError("one dilation tuple per resblock kernel size")


class ResBlock(nn.Module):
    """Dilated residual stack; one of the parallel receptive-field branches."""

    def __init__(self, channels: int, kernel_size: int, dilations: tuple[int, ...]):
        super().__init__()
        self.convs1 = nn.ModuleList(
            weight_norm(
                nn.Conv1d(
                    channels,
                    channels,
                    kernel_size,
                    dilation=d,
                    padding=(kernel_size - 1) * d // 2,
                )
            )
            for d in dilations
        )
        self.convs2 = nn.ModuleList(
            weight_norm(
                nn.Conv1d(channels, channels, kernel_size, padding=(kernel_size - 1) // 2)
            )
            for _ in dilations
        )

    def forward(self, x: Tensor) -> Tensor:
        for conv1, conv2 in zip(self.convs1, self.convs2):
            residual = conv2(F.leaky_relu(conv1(F.leaky_relu(x, LRELU_SLOPE)), LRELU_SLOPE))
            x = x + residual
        return x


class Generator(nn.Module):
    def __init__(self, config: VocoderConfig):
        super().__init__()
        self.config = config
        channels = config.base_channels
        self.conv_pre = weight_norm(nn.Conv1d(config.mel_dim, channels, 7, padding=3))

        self.upsamples = nn.ModuleList()
        self.fusions = nn.ModuleList()
        for i, factor in enumerate(config.upsample_factors):
            c_in = channels // (2**i)
            c_out = channels // (2 ** (i + 1))
            self.upsamples.append(
                weight_norm(
                    nn.ConvTranspose1d(
                        c_in,
                        c_out,
                        factor * 2,
                        stride=factor,
                        padding=factor // 2 + factor % 2,
                        output_padding=factor % 2,
                    )
                )
            )
            self.fusions.append(
                nn.ModuleList(
                    ResBlock(c_out, k, d)
                    for k, d in zip(config.resblock_kernel_sizes, config.resblock_dilations)
                )
            )
        self.conv_post = weight_norm(
            nn.Conv1d(channels // (2 ** len(config.upsample_factors)), 1, 7, padding=3)
        )
        self.apply(_init_conv_weights)

    def forward(self, mel: Tensor) -> Tensor:
        """(B, mel_dim, T) conditioning to (B, 1, T * hop_size) audio."""
        x = self.conv_pre(mel)
        for upsample, fusion in zip(self.upsamples, self.fusions):
            x = upsample(F.leaky_relu(x, LRELU_SLOPE))
            x = sum(block(x) for block in fusion) / len(fusion)
        x = self.conv_post(F.leaky_relu(x))
        return torch.tanh(x)


def _init_conv_weights(module: nn.Module) -> None:
    if isinstance(module, (nn.Conv1d, nn.ConvTranspose1d)):
        module.weight.data.normal_(0.0, 0.01)


@torch.no_grad()
def generate_waveform(generator: Generator, mel: MelSpectrogram | np.ndarray) -> Waveform:
    """Run the frozen generator on a (T, mel_dim) mel; returns the waveform.

    The sample count is exactly ``T * hop_size``.
    """
    frames = mel.frames if isinstance(mel, MelSpectrogram) else np.asarray(mel)
    was_training = generator.training
    generator.eval()
    try:
        mel_in = torch.from_numpy(np.ascontiguousarray(frames, dtype=np.float32))
        audio = generator(mel_in.T.unsqueeze(0))
    finally:
        generator.train(was_training)
    samples = audio.squeeze(0).squeeze(0).cpu().numpy().astype(np.float32)
    return Waveform(samples, generator.config.sample_rate)
