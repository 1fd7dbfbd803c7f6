"""Log-mel spectrogram extraction.

Conventions are frozen here because frame counts feed the duration
reconciliation: magnitude STFT with a periodic Hann window, win 1024 /
hop 256, centered frames over reflect padding (so T = 1 + floor(N / hop)),
80 triangular mel filters from 0 to 8000 Hz on the Slaney scale with
Slaney area normalization, and natural-log compression with a 1e-5 floor.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np
from scipy.signal import get_window

from voiceclone.errors import AudioTooShort
from voiceclone.frontend.audio import Waveform

LOG_FLOOR = 1e-5


@dataclass(frozen=True)
class MelConfig:
    sample_rate: int = 22050
    n_fft: int = 1024
    win_size: int = 1024
    hop_size: int = 256
    n_mels: int = 80
    fmin: float = 0.0
    fmax: float = 8000.0

    @property
    def log_floor_value(self) -> float:
        return float(np.log(LOG_FLOOR))

    def content_hash(self) -> str:
        payload = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass
class MelSpectrogram:
    frames: np.ndarray  # (T, n_mels) float32, natural-log mel magnitudes
    hop_size: int
    win_size: int

    def __post_init__(self):
        if self.frames.ndim != 2:
            raise ValueError(f"mel frames must be 2-D, got shape {self.frames.shape}")

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def num_bands(self) -> int:
        return self.frames.shape[1]


def _hz_to_mel(freq):
    """Slaney mel scale: linear below 1 kHz, logarithmic above."""
    freq = np.asanyarray(freq, dtype=np.float64)
    f_sp = 200.0 / 3
    mel = freq / f_sp
    min_log_hz = 1000.0
    min_log_mel = min_log_hz / f_sp
    logstep = np.log(6.4) / 27.0
    log_region = freq >= min_log_hz
    mel = np.where(log_region, min_log_mel + np.log(np.maximum(freq, min_log_hz) / min_log_hz) / logstep, mel)
    return mel


def _mel_to_hz(mel):
    mel = np.asanyarray(mel, dtype=np.float64)
    f_sp = 200.0 / 3
    freq = mel * f_sp
    min_log_hz = 1000.0
    min_log_mel = min_log_hz / f_sp
    logstep = np.log(6.4) / 27.0
    log_region = mel >= min_log_mel
    freq = np.where(log_region, min_log_hz * np.exp(logstep * (mel - min_log_mel)), freq)
    return freq


@lru_cache(maxsize=8)
def _cached_filterbank(sample_rate: int, n_fft: int, n_mels: int, fmin: float, fmax: float) -> np.ndarray:
    fft_freqs = np.linspace(0.0, sample_rate / 2, n_fft // 2 + 1)
    mel_edges = _mel_to_hz(np.linspace(_hz_to_mel(fmin), _hz_to_mel(fmax), n_mels + 2))

    fb = np.zeros((n_mels, len(fft_freqs)), dtype=np.float64)
    for m in range(n_mels):
        left, center, right = mel_edges[m], mel_edges[m + 1], mel_edges[m + 2]
        up = (fft_freqs - left) / (center - left)
        down = (right - fft_freqs) / (right - center)
        fb[m] = np.maximum(0.0, np.minimum(up, down))
        # Slaney normalization: constant filter area
        fb[m] *= 2.0 / (right - left)
    return fb


def mel_filterbank(config: MelConfig) -> np.ndarray:
    """Triangular mel filterbank, shape (n_mels, n_fft // 2 + 1)."""
    return _cached_filterbank(
        config.sample_rate, config.n_fft, config.n_mels, config.fmin, config.fmax
    )


def mel_band_centers(config: MelConfig) -> np.ndarray:
    """Center frequency in Hz of each mel band."""
    edges = _mel_to_hz(
        np.linspace(_hz_to_mel(config.fmin), _hz_to_mel(config.fmax), config.n_mels + 2)
    )
    return edges[1:-1]


def stft_magnitude(samples: np.ndarray, config: MelConfig) -> np.ndarray:
    """Centered magnitude STFT, shape (T, n_fft // 2 + 1)."""
    pad = config.n_fft // 2
    if len(samples) < pad + 1:
        raise AudioTooShort(
            f"need more than {pad} samples for one centered analysis window, got {len(samples)}"
        )
    padded = np.pad(samples.astype(np.float64), pad, mode="reflect")
    window = get_window("hann", config.win_size, fftbins=True)

    num_frames = 1 + (len(padded) - config.win_size) // config.hop_size
    strides = (padded.strides[0] * config.hop_size, padded.strides[0])
    frames = np.lib.stride_tricks.as_strided(
        padded, shape=(num_frames, config.win_size), strides=strides, writeable=False
    )
    return np.abs(np.fft.rfft(frames * window, n=config.n_fft, axis=1))


def compute_mel(wave: Waveform, config: MelConfig = MelConfig()) -> MelSpectrogram:
    """Log-mel spectrogram of a waveform at the configured sample rate.

    The frame count is exactly ``1 + floor(len(samples) / hop_size)``.

    Raises:
        AudioTooShort: too few samples to reflect-pad one analysis window.
        ValueError: waveform sample rate differs from the config.
    """
    if wave.sample_rate != config.sample_rate:
        raise ValueError(
            f"waveform is {wave.sample_rate} Hz, config expects {config.sample_rate} Hz"
        )
    magnitude = stft_magnitude(wave.samples, config)
    mel = magnitude @ mel_filterbank(config).T
    log_mel = np.log(np.maximum(mel, LOG_FLOOR))
    return MelSpectrogram(log_mel.astype(np.float32), config.hop_size, config.win_size)
