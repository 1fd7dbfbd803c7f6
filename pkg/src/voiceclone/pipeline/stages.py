"""The three pipeline stages.

Stage 1 trains the duration predictor, the acoustic model and the
vocoder on the multi-speaker corpus. Stage 2 fine-tunes the acoustic
model on the target speaker, regenerates teacher-forced mels with the
adapted model, and then fine-tunes the vocoder on (ground-truth
waveform, predicted mel) pairs. Stage 3 turns text into WAV files with
the adapted models. Every stage takes and releases a lock on its output
directory, writes its checkpoints there, and leaves a run record.
"""

from __future__ import annotations

import contextlib
import copy
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from voiceclone import acoustic as am
from voiceclone import duration as dm
from voiceclone.errors import (
    ConfigInvalid,
    EmptyTargetCorpus,
    MissingCheckpoint,
    StageLocked,
    UnknownGrapheme,
)
from voiceclone.frontend import Waveform, save_wav, text_to_phones
from voiceclone.frontend.lexicon import Lexicon
from voiceclone.frontend.phones import PhoneInventory
from voiceclone.pipeline import checkpoint as ckpt
from voiceclone.pipeline import data
from voiceclone.pipeline.config import PipelineConfig
from voiceclone.pipeline.records import RunRecord, sample_curve
from voiceclone.vocoder import (
    Generator,
    VocoderConfig,
    VocoderDiscriminators,
    adapt_vocoder,
    generate_waveform,
    train_vocoder,
)

LOCK_NAME = ".lock"

CHECKPOINT_FILES = {
    ckpt.KIND_DURATION: "duration.ckpt",
    ckpt.KIND_ACOUSTIC: "acoustic.ckpt",
    ckpt.KIND_VOCODER_GENERATOR: "vocoder_generator.ckpt",
    ckpt.KIND_VOCODER_DISCRIMINATORS: "vocoder_discriminators.ckpt",
}


@contextlib.contextmanager
def stage_lock(out_dir: Path):
    """Refuse to run while another live process holds this directory."""
    out_dir.mkdir(parents=True, exist_ok=True)
    lock = out_dir / LOCK_NAME
    if lock.exists():
        try:
            holder = int(lock.read_text().strip())
        except ValueError:
            holder = -1
        if holder > 0 and _pid_alive(holder):
            raise StageLocked(f"{out_dir} is locked by live process {holder}")
    lock.write_text(str(os.getpid()))
    try:
        yield
    finally:
        lock.unlink(missing_ok=True)


def _pid_alive(pid: int) -> bool:
    try:
        os.kill(pid, 0)
    except OSError:
        return False
    return True


def _seed_everything(seed: int) -> None:
    torch.manual_seed(seed)
    np.random.seed(seed)


def _progress(cb, **kv):
    if cb is not None:
        cb(" ".join(f"{k}={v}" for k, v in kv.items()))


@dataclass
class Stage1Result:
    duration_path: Path
    acoustic_path: Path
    vocoder_generator_path: Path
    vocoder_discriminators_path: Path
    record: RunRecord


@dataclass
class Stage2Result:
    acoustic_path: Path
    vocoder_generator_path: Path
    vocoder_discriminators_path: Path
    record: RunRecord


@dataclass
class Stage3Result:
    wav_paths: list[Path]
    record: RunRecord


def _model_sections(config: PipelineConfig, vocab_size: int, speaker_count: int):
    acoustic_cfg = am.AcousticConfig(
        vocab_size=vocab_size,
        speaker_count=speaker_count,
        mel_dim=config.mel.n_mels,
        **config.acoustic_model.__dict__,
    )
    duration_cfg = dm.DurationModelConfig(
        vocab_size=vocab_size, **config.duration_model.__dict__
    )
    vocoder_cfg = VocoderConfig(
        mel_dim=config.mel.n_mels,
        hop_size=config.mel.hop_size,
        sample_rate=config.mel.sample_rate,
        **config.vocoder_model.__dict__,
    )
    return duration_cfg, acoustic_cfg, vocoder_cfg


def _shared_extra(config: PipelineConfig, inventory: PhoneInventory, speaker_map: dict) -> dict:
    return {
        "phone_inventory": inventory.symbols,
        "speaker_map": dict(speaker_map),
        "mel_config": config.mel.__dict__ | {},
    }


def run_stage1_train(config: PipelineConfig, progress=None) -> Stage1Result:
    """Multi-speaker training of all three models; returns checkpoint paths."""
    config.validate_for("train")
    out_dir = config.stage_dir("stage1")
    record = RunRecord("train", config.content_hash(), config.seed)
    with stage_lock(out_dir):
        _seed_everything(config.seed)
        inventory = data.inventory_from_config(config)
        manifest, prepared, summary = data.prepare_corpus(
            config.data.corpus_dir,
            config.features_dir,
            config.mel,
            config.audio,
            inventory,
            manifest_out=config.work_dir / "manifest.jsonl",
        )
        manifest = data.filter_by_policy(manifest, config.train.corpus_policy)
        if not manifest.records:
            raise ConfigInvalid(
                f"corpus policy {config.train.corpus_policy!r} leaves no speakers"
            )
        kept = {r.utterance_id for r in manifest.records}
        prepared = [p for p in prepared if p.record.utterance_id in kept]
        speaker_map = data.speaker_map_from(manifest)
        _progress(
            progress,
            stage="train",
            utterances=len(prepared),
            speakers=len(speaker_map),
            cache_hits=summary.cache_hits,
        )

        duration_cfg, acoustic_cfg, vocoder_cfg = _model_sections(
            config, len(inventory), len(speaker_map)
        )
        extra = _shared_extra(config, inventory, speaker_map)

        duration_model = dm.DurationPredictor(duration_cfg)
        duration_losses = dm.train_duration(
            duration_model,
            data.duration_examples(prepared, inventory),
            config.train.duration_steps,
            batch_size=config.train.batch_size,
            learning_rate=config.train.duration_lr,
            seed=config.seed,
            log_every=config.train.log_every,
            log_cb=lambda s, l: _progress(progress, model="duration", step=s, loss=f"{l:.4f}"),
        )

        acoustic_model = am.AcousticModel(acoustic_cfg)
        acoustic_losses = am.train_acoustic(
            acoustic_model,
            data.acoustic_examples(prepared, inventory, speaker_map),
            config.train.acoustic_steps,
            batch_size=config.train.batch_size,
            learning_rate=config.train.acoustic_lr,
            seed=config.seed,
            log_every=config.train.log_every,
            log_cb=lambda s, l: _progress(progress, model="acoustic", step=s, loss=f"{l:.4f}"),
        )

        generator = Generator(vocoder_cfg)
        discriminators = VocoderDiscriminators(vocoder_cfg)
        vocoder_reports = train_vocoder(
            generator,
            discriminators,
            data.vocoder_pairs(prepared, config.mel, config.audio),
            config.train.vocoder_steps,
            mel_config=config.mel,
            batch_size=config.train.batch_size,
            seed=config.seed,
            log_every=config.train.log_every,
            log_cb=lambda s, r: _progress(
                progress, model="vocoder", step=s, mel_loss=f"{r.mel_reconstruction:.4f}"
            ),
        )

        paths = {kind: out_dir / name for kind, name in CHECKPOINT_FILES.items()}
        steps = {
            ckpt.KIND_DURATION: config.train.duration_steps,
            ckpt.KIND_ACOUSTIC: config.train.acoustic_steps,
            ckpt.KIND_VOCODER_GENERATOR: config.train.vocoder_steps,
            ckpt.KIND_VOCODER_DISCRIMINATORS: config.train.vocoder_steps,
        }
        models = {
            ckpt.KIND_DURATION: duration_model,
            ckpt.KIND_ACOUSTIC: acoustic_model,
            ckpt.KIND_VOCODER_GENERATOR: generator,
            ckpt.KIND_VOCODER_DISCRIMINATORS: discriminators,
        }
        for kind, model in models.items():
            ckpt.save_checkpoint(
                paths[kind],
                kind,
                model,
                step=steps[kind],
                config_hash=config.content_hash(),
                extra=extra,
            )

        mel_curve = [r.mel_reconstruction for r in vocoder_reports]
        record.loss_curves = {
            "duration": sample_curve(duration_losses),
            "acoustic": sample_curve(acoustic_losses),
            "vocoder_mel": sample_curve(mel_curve),
        }
        record.final_losses = {
            "duration": duration_losses[-1] if duration_losses else float("nan"),
            "acoustic": acoustic_losses[-1] if acoustic_losses else float("nan"),
            "vocoder_mel": mel_curve[-1] if mel_curve else float("nan"),
        }
        record.artifacts = [str(p) for p in paths.values()]
        record.finish().write(out_dir / "run_record.json")
    return Stage1Result(
        paths[ckpt.KIND_DURATION],
        paths[ckpt.KIND_ACOUSTIC],
        paths[ckpt.KIND_VOCODER_GENERATOR],
        paths[ckpt.KIND_VOCODER_DISCRIMINATORS],
        record,
    )


def _stage1_paths(config: PipelineConfig) -> dict[str, Path]:
    stage1 = config.stage_dir("stage1")
    paths = {kind: stage1 / name for kind, name in CHECKPOINT_FILES.items()}
    for kind, path in paths.items():
        if not path.exists():
            raise MissingCheckpoint(
                f"{path} not found; run the train stage before adaptation"
            )
    return paths


def run_stage2_adapt(config: PipelineConfig, progress=None) -> Stage2Result:
    """Target-speaker adaptation of the acoustic model, then the vocoder."""
    config.validate_for("adapt")
    stage1_paths = _stage1_paths(config)
    out_dir = config.stage_dir("stage2")
    record = RunRecord("adapt", config.content_hash(), config.seed)
    with stage_lock(out_dir):
        _seed_everything(config.seed)
        acoustic_model, acoustic_payload = ckpt.load_model(
            stage1_paths[ckpt.KIND_ACOUSTIC], ckpt.KIND_ACOUSTIC
        )
        duration_payload = ckpt.load_checkpoint(
            stage1_paths[ckpt.KIND_DURATION], ckpt.KIND_DURATION
        )
        generator, _ = ckpt.load_model(
            stage1_paths[ckpt.KIND_VOCODER_GENERATOR], ckpt.KIND_VOCODER_GENERATOR
        )
        discriminators, _ = ckpt.load_model(
            stage1_paths[ckpt.KIND_VOCODER_DISCRIMINATORS], ckpt.KIND_VOCODER_DISCRIMINATORS
        )
        inventory = PhoneInventory(acoustic_payload.extra["phone_inventory"])
        speaker_map = dict(acoustic_payload.extra["speaker_map"])

        target = config.adapt.target_speaker
        manifest, prepared, summary = data.prepare_corpus(
            config.data.target_corpus_dir,
            config.features_dir,
            config.mel,
            config.audio,
            inventory,
            manifest_out=config.work_dir / "target_manifest.jsonl",
        )
        target_prepared = [p for p in prepared if p.record.speaker_id == target]
        if not target_prepared:
            raise EmptyTargetCorpus(
                f"speaker {target!r} has no usable utterances in "
                f"{config.data.target_corpus_dir} (speakers: {manifest.speaker_names})"
            )
        _progress(
            progress,
            stage="adapt",
            target=target,
            utterances=len(target_prepared),
            cache_hits=summary.cache_hits,
        )

        # target examples start on a placeholder row; adaptation appends
        # the real one and retargets them
        examples = data.acoustic_examples(target_prepared, inventory, {target: 0})

        baseline = None
        if config.adapt.acoustic_steps > 0:
            probe = copy.deepcopy(acoustic_model)
            probe_sid = probe.add_speaker()
            probe_examples = [
                am.AcousticExample(e.phone_ids, e.durations, e.mel, probe_sid)
                for e in examples
            ]
            baseline = am.evaluate_acoustic(probe, probe_examples)
            del probe

        result = am.adapt_acoustic(
            acoustic_model,
            examples,
            config.adapt.acoustic_steps,
            batch_size=config.adapt.batch_size,
            learning_rate=config.adapt.acoustic_lr,
            seed=config.seed,
            log_cb=lambda s, l: _progress(progress, model="acoustic", step=s, loss=f"{l:.4f}"),
        )
        adapted_acoustic = result.model
        if result.speaker_id is not None:
            speaker_map[target] = result.speaker_id
            adapted_examples = [
                am.AcousticExample(e.phone_ids, e.durations, e.mel, result.speaker_id)
                for e in examples
            ]
            adapted_loss = am.evaluate_acoustic(adapted_acoustic, adapted_examples)
        else:
            adapted_examples = examples
            adapted_loss = float("nan")

        mel_generator = torch.Generator().manual_seed(config.seed)
        predicted_mels = am.teacher_forced_mels(adapted_acoustic, adapted_examples, mel_generator)
        gt_waves = [
            data.load_utterance_audio(p.record, config.mel, config.audio).samples
            for p in target_prepared
        ]
        adapted_gen, adapted_disc, vocoder_reports = adapt_vocoder(
            generator,
            discriminators,
            gt_waves,
            predicted_mels,
            config.adapt.vocoder_steps,
            mel_config=config.mel,
            batch_size=config.adapt.batch_size,
            seed=config.seed,
            log_cb=lambda s, r: _progress(
                progress, model="vocoder", step=s, mel_loss=f"{r.mel_reconstruction:.4f}"
            ),
        )

        extra = _shared_extra(config, inventory, speaker_map)
        acoustic_path = out_dir / CHECKPOINT_FILES[ckpt.KIND_ACOUSTIC]
        gen_path = out_dir / CHECKPOINT_FILES[ckpt.KIND_VOCODER_GENERATOR]
        disc_path = out_dir / CHECKPOINT_FILES[ckpt.KIND_VOCODER_DISCRIMINATORS]
        duration_path = out_dir / CHECKPOINT_FILES[ckpt.KIND_DURATION]
        ckpt.save_checkpoint(
            acoustic_path,
            ckpt.KIND_ACOUSTIC,
            adapted_acoustic,
            step=acoustic_payload.step + config.adapt.acoustic_steps,
            config_hash=config.content_hash(),
            extra=extra,
        )
        ckpt.save_checkpoint(
            gen_path,
            ckpt.KIND_VOCODER_GENERATOR,
            adapted_gen,
            step=config.adapt.vocoder_steps,
            config_hash=config.content_hash(),
            extra=extra,
        )
        ckpt.save_checkpoint(
            disc_path,
            ckpt.KIND_VOCODER_DISCRIMINATORS,
            adapted_disc,
            step=config.adapt.vocoder_steps,
            config_hash=config.content_hash(),
            extra=extra,
        )
        # the duration model is trained in stage 1 and stays frozen; copy
        # it forward so stage 3 finds everything in one directory
        duration_model = ckpt.build_model(ckpt.KIND_DURATION, duration_payload.model_config)
        duration_model.load_state_dict(duration_payload.state_dict)
        ckpt.save_checkpoint(
            duration_path,
            ckpt.KIND_DURATION,
            duration_model,
            step=duration_payload.step,
            config_hash=config.content_hash(),
            extra=extra,
        )

        record.final_losses = {
            "acoustic_pre_adapt": baseline if baseline is not None else float("nan"),
            "acoustic_post_adapt": adapted_loss,
            "vocoder_mel": (
                vocoder_reports[-1].mel_reconstruction if vocoder_reports else float("nan")
            ),
        }
        record.loss_curves = {
            "acoustic_adapt": sample_curve(result.losses),
            "vocoder_adapt_mel": sample_curve([r.mel_reconstruction for r in vocoder_reports]),
        }
        record.artifacts = [str(acoustic_path), str(gen_path), str(disc_path), str(duration_path)]
        record.finish().write(out_dir / "run_record.json")
    return Stage2Result(acoustic_path, gen_path, disc_path, record)


def run_stage3_synthesize(
    config: PipelineConfig, texts: list[str], progress=None
) -> Stage3Result:
    """Text to WAV with the adapted models; one file per input text."""
    config.validate_for("synth")
    ckpt_dir = Path(config.synth.checkpoint_dir or config.stage_dir("stage2"))
    needed = (
        ckpt.KIND_DURATION,
        ckpt.KIND_ACOUSTIC,
        ckpt.KIND_VOCODER_GENERATOR,
    )
    paths = {kind: ckpt_dir / CHECKPOINT_FILES[kind] for kind in needed}
    for kind, path in paths.items():
        if not path.exists():
            raise MissingCheckpoint(
                f"{path} not found; run the adapt stage first or point "
                "synth.checkpoint_dir at a stage with checkpoints"
            )

    out_dir = config.stage_dir("stage3")
    record = RunRecord("synth", config.content_hash(), config.seed)
    with stage_lock(out_dir):
        _seed_everything(config.seed)
        duration_model, _ = ckpt.load_model(paths[ckpt.KIND_DURATION], ckpt.KIND_DURATION)
        acoustic_model, acoustic_payload = ckpt.load_model(
            paths[ckpt.KIND_ACOUSTIC], ckpt.KIND_ACOUSTIC
        )
        generator, _ = ckpt.load_model(
            paths[ckpt.KIND_VOCODER_GENERATOR], ckpt.KIND_VOCODER_GENERATOR
        )
        inventory = PhoneInventory(acoustic_payload.extra["phone_inventory"])
        speaker_map = dict(acoustic_payload.extra["speaker_map"])
        if config.synth.speaker not in speaker_map:
            raise ConfigInvalid(
                f"speaker {config.synth.speaker!r} not in checkpoint speaker map "
                f"({sorted(speaker_map)})"
            )
        speaker_id = speaker_map[config.synth.speaker]
        lexicon = Lexicon.from_file(config.data.lexicon)

        wav_paths: list[Path] = []
        for index, text in enumerate(texts):
            try:
                wave = synthesize_utterance(
                    text,
                    lexicon,
                    inventory,
                    duration_model,
                    acoustic_model,
                    generator,
                    speaker_id,
                    add_boundary_silence=config.synth.add_boundary_silence,
                    prenet_seed=(
                        config.synth.prenet_seed + index
                        if config.synth.prenet_seed is not None
                        else None
                    ),
                )
            except UnknownGrapheme as exc:
                record.errors.append(
                    {"index": index, "text": text, "category": exc.category, "error": str(exc)}
                )
                _progress(progress, stage="synth", text=index, error=str(exc))
                continue
            wav_path = out_dir / f"utt_{index:04d}.wav"
            save_wav(wav_path, wave)
            wav_paths.append(wav_path)
            _progress(
                progress,
                stage="synth",
                text=index,
                seconds=f"{wave.duration:.2f}",
                path=wav_path,
            )
        record.artifacts = [str(p) for p in wav_paths]
        record.finish().write(out_dir / "run_record.json")
    return Stage3Result(wav_paths, record)


def synthesize_utterance(
    text: str,
    lexicon: Lexicon,
    inventory: PhoneInventory,
    duration_model,
    acoustic_model,
    generator: Generator,
    speaker_id: int,
    *,
    add_boundary_silence: bool = True,
    prenet_seed: int | None = None,
) -> Waveform:
    """Full text-to-waveform path for one utterance."""
    phones = text_to_phones(text, lexicon, add_boundary_silence=add_boundary_silence)
    phone_ids = torch.as_tensor(inventory.to_ids(phones), dtype=torch.long)
    durations = dm.predict_durations(duration_model, phone_ids)
    with torch.no_grad():
        encoded = acoustic_model.encode(phone_ids)
        expanded = am.length_regulate(
            encoded, durations, acoustic_model.speaker_vector(speaker_id)
        )
        noise = (
            torch.Generator().manual_seed(prenet_seed) if prenet_seed is not None else None
        )
        mel = acoustic_model.autoregressive_synthesize(expanded, generator=noise)
    mel_np = mel.cpu().numpy().astype(np.float32)
    return generate_waveform(generator, mel_np)
