"""Griffin-Lim phase reconstruction from log-mel spectrograms.

Test baseline, not a production vocoder: log-mels are mapped back to
linear magnitudes through the filterbank pseudo-inverse (clipped at
zero), then the standard alternating projections run from a zero-phase
start, so results are deterministic.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import torch

from voiceclone.frontend.audio import Waveform
from voiceclone.frontend.mel import MelConfig, MelSpectrogram, mel_filterbank


@lru_cache(maxsize=4)
def _pseudo_inverse(config: MelConfig) -> np.ndarray:
    return np.linalg.pinv(mel_filterbank(config))


def mel_to_magnitude(mel_frames: np.ndarray, config: MelConfig) -> np.ndarray:
    """Approximate linear magnitudes, shape (n_fft // 2 + 1, T)."""
    energy = np.exp(mel_frames.astype(np.float64))  # undo log compression
    magnitude = _pseudo_inverse(config) @ energy.T
    return np.maximum(magnitude, 0.0)


def griffin_lim(
    mel: MelSpectrogram | np.ndarray,
    iterations: int = 60,
    config: MelConfig = MelConfig(),
) -> Waveform:
    """Reconstruct a waveform whose STFT magnitude approximates the mel.

    Output length is ``(T - 1) * hop``, within one hop of ``T * hop``.
    """
    frames = mel.frames if isinstance(mel, MelSpectrogram) else np.asarray(mel)
    target = torch.from_numpy(mel_to_magnitude(frames, config)).to(torch.float32)
    window = torch.hann_window(config.win_size, periodic=True)

    def from_phase(phase: torch.Tensor) -> torch.Tensor:
        return torch.istft(
            torch.polar(target, phase),
            n_fft=config.n_fft,
            hop_length=config.hop_size,
            win_length=config.win_size,
            window=window,
            center=True,
        )

    phase = torch.zeros_like(target)
    for _ in range(iterations):
        rebuilt = torch.stft(
            from_phase(phase),
            n_fft=config.n_fft,
            hop_length=config.hop_size,
            win_length=config.win_size,
            window=window,
            center=True,
            pad_mode="reflect",
            return_complex=True,
        )
        phase = torch.angle(rebuilt)
    samples = from_phase(phase).numpy().astype(np.float32)
    return Waveform(np.clip(samples, -1.0, 1.0), config.sample_rate)
