"""GAN vocoder: multi-receptive-field generator, multi-period and
multi-scale discriminators, plus a Griffin-Lim baseline for tests."""

from voiceclone.vocoder.generator import Generator, VocoderConfig, generate_waveform
from voiceclone.vocoder.discriminators import VocoderDiscriminators
from voiceclone.vocoder.griffin_lim import griffin_lim
from voiceclone.vocoder.training import (
    VocoderLossReport,
    adapt_vocoder,
    align_pair,
    train_vocoder,
    vocoder_train_step,
)

__all__ = [
    "Generator",
    "VocoderConfig",
    "VocoderDiscriminators",
    "VocoderLossReport",
    "adapt_vocoder",
    "align_pair",
    "generate_waveform",
    "griffin_lim",
    "train_vocoder",
    "vocoder_train_step",
]
