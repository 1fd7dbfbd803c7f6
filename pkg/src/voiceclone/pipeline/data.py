"""Corpus preparation and training-example assembly.

Preparation runs the front-end over every manifest record and caches the
results per utterance: the log-mel matrix and the reconciled frame
counts in the binary container, the tier's phone symbols as JSON. Caches
are keyed by the DSP settings hash and checked against the audio content
hash, so editing a WAV or changing mel parameters invalidates exactly
the right entries. Utterances that fail any front-end step are skipped
and reported, never fatal.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from voiceclone.acoustic import AcousticExample
from voiceclone.errors import EmptyCorpus, MalformedAlignment, VoiceCloneError
from voiceclone.frontend import (
    Manifest,
    MelConfig,
    UtteranceRecord,
    build_manifest,
    compute_mel,
    durations_to_frames,
    load_audio,
    parse_alignment,
    save_manifest,
)
from voiceclone.frontend.features import audio_content_hash, read_array, write_array
from voiceclone.frontend.phones import PhoneInventory
from voiceclone.pipeline.config import AudioConfig, PipelineConfig


@dataclass
class PreparedUtterance:
    record: UtteranceRecord
    phone_symbols: list[str]
    durations: np.ndarray
    mel_path: Path

    def load_mel(self) -> np.ndarray:
        mel, _ = read_array(self.mel_path)
        return mel

    @property
    def num_frames(self) -> int:
        return int(self.durations.sum())


@dataclass
class PreparationSummary:
    kept: int = 0
    cache_hits: int = 0
    total_frames: int = 0
    speakers: list[str] = field(default_factory=list)
    skipped: list[tuple[str, str]] = field(default_factory=list)


def dsp_hash(mel_config: MelConfig, audio_config: AudioConfig) -> str:
    payload = json.dumps(
        {
            "mel": mel_config.content_hash(),
            "normalization": audio_config.normalization,
            "peak_level": audio_config.peak_level,
            "rms_level": audio_config.rms_level,
        },
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def load_utterance_audio(record: UtteranceRecord, mel_config: MelConfig, audio: AudioConfig):
    return load_audio(
        record.audio_path,
        mel_config.sample_rate,
        normalization=audio.normalization,
        peak_level=audio.peak_level,
        rms_level=audio.rms_level,
    )


def prepare_corpus(
    corpus_dir: str | Path,
    features_dir: str | Path,
    mel_config: MelConfig,
    audio_config: AudioConfig,
    inventory: PhoneInventory,
    manifest_out: str | Path | None = None,
) -> tuple[Manifest, list[PreparedUtterance], PreparationSummary]:
    """Build the manifest and ensure every utterance's features are cached.

    Raises:
        EmptyCorpus: nothing usable in the corpus directory.
    """
    manifest = build_manifest(corpus_dir)
    cache_dir = Path(features_dir) / dsp_hash(mel_config, audio_config)
    cache_dir.mkdir(parents=True, exist_ok=True)

    summary = PreparationSummary(speakers=manifest.speaker_names)
    summary.skipped.extend(manifest.skipped)
    prepared: list[PreparedUtterance] = []
    for record in manifest.records:
        try:
            prepared.append(
                _prepare_utterance(record, cache_dir, mel_config, audio_config, inventory, summary)
            )
        except VoiceCloneError as exc:
            summary.skipped.append((record.utterance_id, str(exc)))
    if not prepared:
        raise EmptyCorpus(f"no utterance in {corpus_dir} survived feature extraction")

    kept_ids = {p.record.utterance_id for p in prepared}
    manifest.records = [r for r in manifest.records if r.utterance_id in kept_ids]
    manifest.skipped = list(summary.skipped)
    summary.kept = len(prepared)
    summary.total_frames = sum(p.num_frames for p in prepared)
    if manifest_out is not None:
        save_manifest(manifest, manifest_out)
    return manifest, prepared, summary


def _prepare_utterance(
    record: UtteranceRecord,
    cache_dir: Path,
    mel_config: MelConfig,
    audio_config: AudioConfig,
    inventory: PhoneInventory,
    summary: PreparationSummary,
) -> PreparedUtterance:
    mel_path = cache_dir / f"{record.utterance_id}.mel.bin"
    dur_path = cache_dir / f"{record.utterance_id}.dur.bin"
    phones_path = cache_dir / f"{record.utterance_id}.phones.json"

    audio_hash = audio_content_hash(record.audio_path)
    if mel_path.exists() and dur_path.exists() and phones_path.exists():
        _, header = read_array(mel_path)
        if header.get("audio_sha") == audio_hash:
            durations, _ = read_array(dur_path)
            symbols = json.loads(phones_path.read_text(encoding="utf-8"))
            summary.cache_hits += 1
            return PreparedUtterance(record, symbols, durations.astype(np.int64), mel_path)

    wave = load_utterance_audio(record, mel_config, audio_config)
    mel = compute_mel(wave, mel_config)
    tier = parse_alignment(record.alignment_path, inventory)
    frame_period = mel_config.hop_size / mel_config.sample_rate
    if abs(tier.intervals[0].start) > frame_period or (
        abs(tier.total_duration - wave.duration) > frame_period
    ):
        raise MalformedAlignment(
            f"alignment spans [{tier.intervals[0].start:.4f}, {tier.total_duration:.4f}] s "
            f"but audio is {wave.duration:.4f} s"
        )
    durations = durations_to_frames(
        tier, mel_config.hop_size, mel_config.sample_rate, mel.num_frames
    )
    write_array(
        mel_path,
        mel.frames,
        hop=mel_config.hop_size,
        win=mel_config.win_size,
        extra={"audio_sha": audio_hash},
    )
    write_array(dur_path, durations, hop=mel_config.hop_size, win=mel_config.win_size)
    phones_path.write_text(json.dumps(tier.phone_sequence.symbols), encoding="utf-8")
    return PreparedUtterance(record, tier.phone_sequence.symbols, durations, mel_path)


def speaker_map_from(manifest: Manifest) -> dict[str, int]:
    return {name: idx for idx, name in enumerate(manifest.speaker_names)}


def acoustic_examples(
    prepared: list[PreparedUtterance],
    inventory: PhoneInventory,
    speaker_map: dict[str, int],
) -> list[AcousticExample]:
    examples = []
    for utt in prepared:
        examples.append(
            AcousticExample(
                phone_ids=np.asarray(inventory.to_ids(utt.phone_symbols), dtype=np.int64),
                durations=utt.durations.astype(np.int64),
                mel=utt.load_mel().astype(np.float32),
                speaker_id=speaker_map[utt.record.speaker_id],
            )
        )
    return examples


def duration_examples(
    prepared: list[PreparedUtterance], inventory: PhoneInventory
) -> list[tuple[np.ndarray, np.ndarray]]:
    return [
        (
            np.asarray(inventory.to_ids(utt.phone_symbols), dtype=np.int64),
            utt.durations.astype(np.int64),
        )
        for utt in prepared
    ]


def vocoder_pairs(
    prepared: list[PreparedUtterance],
    mel_config: MelConfig,
    audio_config: AudioConfig,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """(waveform, mel) pairs with audio trimmed/padded to frames x hop."""
    from voiceclone.vocoder import align_pair

    pairs = []
    for utt in prepared:
        wave = load_utterance_audio(utt.record, mel_config, audio_config)
        mel = utt.load_mel()
        pairs.append((align_pair(wave.samples, mel.shape[0], mel_config.hop_size), mel))
    return pairs


def filter_by_policy(manifest: Manifest, policy: str) -> Manifest:
    """Apply the stage-1 corpus policy: all speakers, or high-quality only."""
    if policy == "all":
        return manifest
    high = {name for name, quality in manifest.speakers.items() if quality == "high"}
    return manifest.filtered(high)


def inventory_from_config(config: PipelineConfig) -> PhoneInventory:
    from voiceclone.frontend.lexicon import Lexicon

    return Lexicon.from_file(config.data.lexicon).phone_inventory()
