"""Versioned model checkpoints.

A checkpoint is a torch-saved mapping with a magic marker, format
version, model kind, the model's own config, its state dict, the
training step counter, the producing run's config hash, and a free-form
extra block (phone inventory, speaker map, mel settings).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path

import torch
from torch import nn

from voiceclone.acoustic import AcousticConfig, AcousticModel
from voiceclone.duration import DurationModelConfig, DurationPredictor
from voiceclone.errors import (
    ConfigHashMismatch,
    CorruptCheckpoint,
    MissingCheckpoint,
    VersionMismatch,
)
from voiceclone.vocoder import Generator, VocoderConfig, VocoderDiscriminators

MAGIC = "voiceclone-checkpoint"
FORMAT_VERSION = 1

KIND_DURATION = "duration"
KIND_ACOUSTIC = "acoustic"
KIND_VOCODER_GENERATOR = "vocoder_generator"
KIND_VOCODER_DISCRIMINATORS = "vocoder_discriminators"
ALL_KINDS = (
    KIND_DURATION,
    KIND_ACOUSTIC,
    KIND_VOCODER_GENERATOR,
    KIND_VOCODER_DISCRIMINATORS,
)


@dataclass
class CheckpointPayload:
    kind: str
    model_config: dict
    state_dict: dict
    step: int
    config_hash: str
    extra: dict = field(default_factory=dict)


def save_checkpoint(
    path: str | Path,
    kind: str,
    model: nn.Module,
    *,
    step: int = 0,
    config_hash: str = "",
    extra: dict | None = None,
) -> None:
    if kind not in ALL_KINDS:
        raise ValueError(f"unknown checkpoint kind {kind!r}")
    payload = {
        "magic": MAGIC,
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "model_config": asdict(model.config),
        "state_dict": model.state_dict(),
        "step": int(step),
        "config_hash": config_hash,
        "extra": extra or {},
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(payload, path)


def load_checkpoint(
    path: str | Path,
    expected_kind: str | None = None,
    expected_config_hash: str | None = None,
    force: bool = False,
) -> CheckpointPayload:
    """Read and validate a checkpoint file.

    Raises:
        MissingCheckpoint: file does not exist.
        CorruptCheckpoint: unreadable, wrong magic, or wrong kind.
        VersionMismatch: other format version (with a migration hint).
        ConfigHashMismatch: hash check requested and failed, unless forced.
    """
    path = Path(path)
    if not path.exists():
        raise MissingCheckpoint(str(path))
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as exc:
        raise CorruptCheckpoint(f"{path}: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("magic") != MAGIC:
        raise CorruptCheckpoint(f"{path}: not a voiceclone checkpoint")
    version = payload.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionMismatch(
            f"{path}: format version {version}, this build reads {FORMAT_VERSION}; "
            "re-export the checkpoint with a matching package version"
        )
    kind = payload.get("kind")
    if expected_kind is not None and kind != expected_kind:
        raise CorruptCheckpoint(f"{path}: kind {kind!r}, expected {expected_kind!r}")
    stored_hash = payload.get("config_hash", "")
    if expected_config_hash is not None and stored_hash != expected_config_hash and not force:
        raise ConfigHashMismatch(
            f"{path}: checkpoint config hash {stored_hash!r} != expected "
            f"{expected_config_hash!r} (pass force to load anyway)"
        )
    return CheckpointPayload(
        kind=kind,
        model_config=payload.get("model_config", {}),
        state_dict=payload.get("state_dict", {}),
        step=int(payload.get("step", 0)),
        config_hash=stored_hash,
        extra=payload.get("extra", {}),
    )


def _tupled(value):
    if isinstance(value, (list, tuple)):
        return tuple(_tupled(v) for v in value)
    return value


def build_model(kind: str, model_config: dict) -> nn.Module:
    cfg = {k: _tupled(v) for k, v in model_config.items()}
    if kind == KIND_DURATION:
        return DurationPredictor(DurationModelConfig(**cfg))
    if kind == KIND_ACOUSTIC:
        return AcousticModel(AcousticConfig(**cfg))
    if kind == KIND_VOCODER_GENERATOR:
        return Generator(VocoderConfig(**cfg))
    if kind == KIND_VOCODER_DISCRIMINATORS:
        return VocoderDiscriminators(VocoderConfig(**cfg))
    raise ValueError(f"unknown checkpoint kind {kind!r}")


def load_model(
    path: str | Path,
    expected_kind: str | None = None,
    expected_config_hash: str | None = None,
    force: bool = False,
) -> tuple[nn.Module, CheckpointPayload]:
    """Rebuild the model a checkpoint describes and load its weights."""
    payload = load_checkpoint(path, expected_kind, expected_config_hash, force)
    model = build_model(payload.kind, payload.model_config)
    try:
        model.load_state_dict(payload.state_dict)
    except (RuntimeError, KeyError) as exc:
        raise CorruptCheckpoint(f"{path}: state dict mismatch ({exc})") from exc
    model.eval()
    return model, payload
