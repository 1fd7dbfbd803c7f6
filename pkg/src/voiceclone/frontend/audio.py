"""Waveform ingestion: PCM WAV reading, resampling and loudness control."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

from voiceclone.errors import EmptyAudio, UnsupportedFormat

TARGET_SAMPLE_RATE = 22050

_PCM_SCALE = {
    np.dtype(np.int16): 2**15,
    np.dtype(np.int32): 2**31,
    np.dtype(np.uint8): 2**7,  # offset binary, handled below
}


@dataclass
class Waveform:
    samples: np.ndarray  # float32 in [-1, 1]
    sample_rate: int

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


def load_audio(
    path: str | Path,
    target_sr: int = TARGET_SAMPLE_RATE,
    *,
    normalization: str = "peak",
    peak_level: float = 0.95,
    rms_level: float = 0.1,
) -> Waveform:
    """Read a PCM WAV file, resample to ``target_sr`` and normalize loudness.

    ``normalization`` is "peak" (scale the absolute peak to ``peak_level``),
    "rms" (scale to ``rms_level`` RMS, then clip to [-1, 1]) or "none".

    Raises:
        UnsupportedFormat: not a readable PCM WAV file.
        EmptyAudio: file decodes to zero samples.
    """
    try:
        sr, data = wavfile.read(str(path))
    except FileNotFoundError:
        raise
    except Exception as exc:
        raise UnsupportedFormat(f"{path}: {exc}") from exc
    if data.size == 0:
        raise EmptyAudio(str(path))

    if data.ndim == 2:  # downmix channels
        data = data.mean(axis=1)
    if data.dtype == np.uint8:
        samples = (data.astype(np.float64) - 128.0) / 128.0
    elif data.dtype in _PCM_SCALE:
        samples = data.astype(np.float64) / _PCM_SCALE[data.dtype]
    elif np.issubdtype(data.dtype, np.floating):
        samples = data.astype(np.float64)
    else:
        raise UnsupportedFormat(f"{path}: unsupported sample dtype {data.dtype}")

    if sr != target_sr:
        gcd = math.gcd(int(sr), int(target_sr))
        samples = resample_poly(samples, target_sr // gcd, sr // gcd)

    if normalization == "peak":
        peak = np.abs(samples).max()
        if peak > 0:
            samples = samples * (peak_level / peak)
    elif normalization == "rms":
        rms = float(np.sqrt(np.mean(samples**2)))
        if rms > 0:
            samples = np.clip(samples * (rms_level / rms), -1.0, 1.0)
    elif normalization != "none":
        raise ValueError(f"unknown normalization mode {normalization!r}")

    samples = np.clip(samples, -1.0, 1.0)
    return Waveform(samples.astype(np.float32), target_sr)


def save_wav(path: str | Path, wave: Waveform) -> None:
    """Write 16-bit PCM at the waveform's sample rate."""
    clipped = np.clip(wave.samples, -1.0, 1.0)
    pcm = (clipped * 32767.0).astype(np.int16)
    wavfile.write(str(path), wave.sample_rate, pcm)
