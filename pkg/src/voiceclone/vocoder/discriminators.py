"""Waveform critics: multi-period and multi-scale discriminator ensembles.

Each sub-discriminator returns its score map together with intermediate
feature maps, which the generator's feature-matching loss consumes.
"""

from __future__ import annotations

import math

import torch
import torch.nn.functional as F
from torch import Tensor, nn
from torch.nn.utils.parametrizations import weight_norm

from voiceclone.vocoder.generator import LRELU_SLOPE, VocoderConfig


class PeriodDiscriminator(nn.Module):
    """Views the waveform as a 2-D grid of shape (time / period, period)."""

    def __init__(self, period: int, base_channels: int, max_channels: int):
        super().__init__()
        self.period = period
        convs = []
        c_in = 1
        c_out = base_channels
        for _ in range(4):
            convs.append(weight_norm(nn.Conv2d(c_in, c_out, (5, 1), (3, 1), padding=(2, 0))))
            c_in, c_out = c_out, min(c_out * 4, max_channels)
        convs.append(weight_norm(nn.Conv2d(c_in, c_in, (5, 1), padding=(2, 0))))
        self.convs = nn.ModuleList(convs)
        self.conv_post = weight_norm(nn.Conv2d(c_in, 1, (3, 1), padding=(1, 0)))

    def forward(self, wave: Tensor) -> tuple[Tensor, list[Tensor]]:
        batch, channels, length = wave.shape
        if length % self.period:
            pad = self.period - length % self.period
            wave = F.pad(wave, (0, pad), mode="reflect")
            length += pad
        x = wave.view(batch, channels, length // self.period, self.period)
        features = []
        for conv in self.convs:
            x = F.leaky_relu(conv(x), LRELU_SLOPE)
            features.append(x)
        score = self.conv_post(x)
        features.append(score)
        return torch.flatten(score, 1, -1), features


class ScaleDiscriminator(nn.Module):
    """1-D conv stack over a (possibly downsampled) waveform."""

    def __init__(self, base_channels: int, max_channels: int):
        super().__init__()
        c1 = base_channels
        c2 = min(c1 * 4, max_channels)
        c3 = min(c2 * 4, max_channels)
        g1 = math.gcd(4, math.gcd(c1, c2))
        g2 = math.gcd(16, math.gcd(c2, c3))
        self.convs = nn.ModuleList(
            [
                weight_norm(nn.Conv1d(1, c1, 15, stride=1, padding=7)),
                weight_norm(nn.Conv1d(c1, c2, 41, stride=4, groups=g1, padding=20)),
                weight_norm(nn.Conv1d(c2, c3, 41, stride=4, groups=g2, padding=20)),
                weight_norm(nn.Conv1d(c3, c3, 5, stride=1, padding=2)),
            ]
        )
        self.conv_post = weight_norm(nn.Conv1d(c3, 1, 3, padding=1))

    def forward(self, wave: Tensor) -> tuple[Tensor, list[Tensor]]:
        x = wave
        features = []
        for conv in self.convs:
            x = F.leaky_relu(conv(x), LRELU_SLOPE)
            features.append(x)
        score = self.conv_post(x)
        features.append(score)
        return torch.flatten(score, 1, -1), features


class VocoderDiscriminators(nn.Module):
    """All sub-discriminators behind one forward call.

    Returns one (score, features) pair per sub-discriminator, periods
    first, then scales from raw to most downsampled.
    """

    def __init__(self, config: VocoderConfig):
        super().__init__()
        self.config = config
        self.period_discriminators = nn.ModuleList(
            PeriodDiscriminator(p, config.disc_base_channels, config.disc_max_channels)
            for p in config.mpd_periods
        )
        self.scale_discriminators = nn.ModuleList(
            ScaleDiscriminator(config.disc_base_channels, config.disc_max_channels)
            for _ in range(config.msd_scales)
        )
        self.pool = nn.AvgPool1d(4, stride=2, padding=2)

    def forward(self, wave: Tensor) -> list[tuple[Tensor, list[Tensor]]]:
        verdicts = [disc(wave) for disc in self.period_discriminators]
        scaled = wave
        for i, disc in enumerate(self.scale_discriminators):
            if i > 0:
                scaled = self.pool(scaled)
            verdicts.append(disc(scaled))
        return verdicts
