"""Pipeline configuration: one YAML file with a section per concern.

Every value has a default, so a minimal config only names the data
paths. CLI flags override config keys through dotted paths
("train.acoustic_steps=500"). The resolved configuration is hashed into
run records and checkpoints so artifact provenance is checkable.

Training hyperparameters here (optimizers, learning rates, batch sizes,
stage-1 step counts) are pragmatic desk-scale defaults; the adaptation
step counts of 3000 are the exception, they are part of the recipe.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import yaml

from voiceclone.errors import ConfigInvalid
from voiceclone.frontend.mel import MelConfig


@dataclass
class DataConfig:
    corpus_dir: str = "corpus"
    target_corpus_dir: str = "target_corpus"
    lexicon: str = "lexicon.txt"
    work_dir: str = "work"


@dataclass
class AudioConfig:
    normalization: str = "peak"  # peak | rms | none
    peak_level: float = 0.95
    rms_level: float = 0.1


@dataclass
class DurationModelSection:
    embedding_dim: int = 256
    recurrent_hidden: int = 512


@dataclass
class AcousticModelSection:
    phone_embedding_dim: int = 256
    encoder_conv_layers: int = 3
    encoder_conv_channels: int = 256
    encoder_conv_kernel: int = 5
    encoder_lstm_hidden: int = 128
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


@dataclass
class VocoderModelSection:
    upsample_factors: tuple[int, ...] = (8, 8, 2, 2)
    base_channels: int = 128
    resblock_kernel_sizes: tuple[int, ...] = (3, 7, 11)
    resblock_dilations: tuple[tuple[int, ...], ...] = ((1, 3, 5), (1, 3, 5), (1, 3, 5))
    mpd_periods: tuple[int, ...] = (2, 3, 5, 7, 11)
    msd_scales: int = 3
    disc_base_channels: int = 16
    disc_max_channels: int = 128
    lambda_adv: float = 1.0
    lambda_fm: float = 2.0
    lambda_mel: float = 45.0
    segment_frames: int = 32
    learning_rate: float = 2e-4


@dataclass
class TrainSection:
    corpus_policy: str = "high_quality"  # high_quality | all
    duration_steps: int = 1000
    duration_lr: float = 1e-3
    acoustic_steps: int = 3000
    acoustic_lr: float = 1e-3
    vocoder_steps: int = 3000
    batch_size: int = 8
    log_every: int = 50


@dataclass
class AdaptSection:
    target_speaker: str = ""
    acoustic_steps: int = 3000
    vocoder_steps: int = 3000
    acoustic_lr: float = 1e-4
    batch_size: int = 8
    log_every: int = 50


@dataclass
class SynthSection:
    speaker: str = ""
    checkpoint_dir: str = ""  # default: <work_dir>/stage2
    add_boundary_silence: bool = True
    prenet_seed: int | None = 1234


@dataclass
class PipelineConfig:
    seed: int = 1234
    data: DataConfig = field(default_factory=DataConfig)
    audio: AudioConfig = field(default_factory=AudioConfig)
    mel: MelConfig = field(default_factory=MelConfig)
    duration_model: DurationModelSection = field(default_factory=DurationModelSection)
    acoustic_model: AcousticModelSection = field(default_factory=AcousticModelSection)
    vocoder_model: VocoderModelSection = field(default_factory=VocoderModelSection)
    train: TrainSection = field(default_factory=TrainSection)
    adapt: AdaptSection = field(default_factory=AdaptSection)
    synth: SynthSection = field(default_factory=SynthSection)

    # --- derived paths ---------------------------------------------------

    @property
    def work_dir(self) -> Path:
        return Path(self.data.work_dir)

    @property
    def features_dir(self) -> Path:
        return self.work_dir / "features"

    def stage_dir(self, stage: str) -> Path:
        return self.work_dir / stage

    # --- identity ---------------------------------------------------------

    def to_dict(self) -> dict:
        return asdict(self)

    def content_hash(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True, default=str)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def validate_for(self, stage: str) -> None:
        """Check the paths and values a stage is about to rely on.

        Raises:
            ConfigInvalid: missing paths or out-of-range values.
        """
        if self.mel.n_mels != 80:
            raise ConfigInvalid("mel.n_mels must be 80 for this model family")
        if not Path(self.data.lexicon).exists():
            raise ConfigInvalid(f"lexicon not found: {self.data.lexicon}")
        if stage == "train":
            if not Path(self.data.corpus_dir).is_dir():
                raise ConfigInvalid(f"corpus_dir not found: {self.data.corpus_dir}")
            if self.train.corpus_policy not in ("high_quality", "all"):
                raise ConfigInvalid(f"unknown corpus_policy {self.train.corpus_policy!r}")
        if stage == "adapt":
            if not Path(self.data.target_corpus_dir).is_dir():
                raise ConfigInvalid(
                    f"target_corpus_dir not found: {self.data.target_corpus_dir}"
                )
            if not self.adapt.target_speaker:
                raise ConfigInvalid("adapt.target_speaker is required")
            if self.adapt.acoustic_steps < 0 or self.adapt.vocoder_steps < 0:
                raise ConfigInvalid("adaptation step counts must be >= 0")
        if stage == "synth" and not self.synth.speaker:
            raise ConfigInvalid("synth.speaker is required")


_SECTION_TYPES = {
    "data": DataConfig,
    "audio": AudioConfig,
    "mel": MelConfig,
    "duration_model": DurationModelSection,
    "acoustic_model": AcousticModelSection,
    "vocoder_model": VocoderModelSection,
    "train": TrainSection,
    "adapt": AdaptSection,
    "synth": SynthSection,
}


def _coerce(value: Any, target_type: Any) -> Any:
    # YAML gives lists; tuple-typed fields need tuples (nested once for
    # the dilation sets)
    if isinstance(value, list):
        return tuple(_coerce(v, None) for v in value)
    return value


def _build_section(cls, raw: dict, section: str):
    known = {f.name: f for f in fields(cls)}
    unknown = set(raw) - set(known)
    if unknown:
        raise ConfigInvalid(f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}")
    kwargs = {name: _coerce(value, known[name].type) for name, value in raw.items()}
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(f"bad [{section}] section: {exc}") from exc


def config_from_dict(raw: dict) -> PipelineConfig:
    raw = dict(raw or {})
    sections = {}
    for name, cls in _SECTION_TYPES.items():
        part = raw.pop(name, {})
        if not isinstance(part, dict):
            raise ConfigInvalid(f"section [{name}] must be a mapping")
        sections[name] = _build_section(cls, part, name)
    seed = raw.pop("seed", 1234)
    if raw:
        raise ConfigInvalid(f"unknown top-level key(s): {', '.join(sorted(raw))}")
    if not isinstance(seed, int):
        raise ConfigInvalid("seed must be an integer")
    return PipelineConfig(seed=seed, **sections)


def apply_overrides(raw: dict, overrides: list[str]) -> dict:
    """Apply "dotted.key=value" overrides onto a raw config dict."""
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigInvalid(f"override {item!r} is not key=value")
        node = raw
        parts = key.strip().split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigInvalid(f"override {key!r} walks through a non-mapping")
        node[parts[-1]] = yaml.safe_load(value)
    return raw


def load_config(path: str | Path | None, overrides: list[str] | None = None) -> PipelineConfig:
    """Load a YAML config file and apply overrides; missing path means
    all-defaults (overrides still apply).

    Raises:
        ConfigInvalid: unreadable file, unknown keys, bad values.
    """
    raw: dict = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigInvalid(f"cannot read config {path}: {exc}") from exc
        try:
            raw = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise ConfigInvalid(f"config {path} is not valid YAML: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigInvalid(f"config {path} must be a mapping at top level")
    if overrides:
        raw = apply_overrides(raw, list(overrides))
    return config_from_dict(raw)
