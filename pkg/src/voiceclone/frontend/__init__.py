"""Text and speech front-end: text to phones, alignments to frame durations,
audio to log-mel features, and corpus manifests."""

from voiceclone.frontend.alignment import (
    AlignmentTier,
    Interval,
    durations_to_frames,
    parse_alignment,
    serialize_alignment,
)
from voiceclone.frontend.audio import Waveform, load_audio, save_wav
from voiceclone.frontend.lexicon import Lexicon, text_to_phones
from voiceclone.frontend.manifest import (
    Manifest,
    UtteranceRecord,
    build_manifest,
    load_manifest,
    save_manifest,
)
from voiceclone.frontend.mel import MelConfig, MelSpectrogram, compute_mel, mel_filterbank
from voiceclone.frontend.phones import SIL, SP, Phone, PhoneInventory, PhoneSequence

__all__ = [
    "AlignmentTier",
    "Interval",
    "Lexicon",
    "Manifest",
    "MelConfig",
    "MelSpectrogram",
    "Phone",
    "PhoneInventory",
    "PhoneSequence",
    "SIL",
    "SP",
    "UtteranceRecord",
    "Waveform",
    "build_manifest",
    "compute_mel",
    "durations_to_frames",
    "load_audio",
    "load_manifest",
    "mel_filterbank",
    "parse_alignment",
    "save_manifest",
    "save_wav",
    "serialize_alignment",
    "text_to_phones",
]
