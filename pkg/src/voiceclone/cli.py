"""Command-line interface.

Subcommands: prepare, train, adapt, synth, inspect. Every flag override
maps onto a config key (see --set); progress output is line-oriented
key=value so long runs can be monitored by scripts. Exit codes: 0
success, 2 usage, otherwise the category table in errors.py.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from voiceclone.errors import CorruptCheckpoint, VoiceCloneError, exit_code_for
from voiceclone.pipeline import checkpoint as ckpt
from voiceclone.pipeline import data
from voiceclone.pipeline.config import load_config
from voiceclone.pipeline.stages import (
    run_stage1_train,
    run_stage2_adapt,
    run_stage3_synthesize,
)

CONFIG_ENV_VAR = "VOICECLONE_CONFIG"


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--config",
        default=os.environ.get(CONFIG_ENV_VAR),
        help=f"config file (default: ${CONFIG_ENV_VAR})",
    )
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config key, e.g. --set train.acoustic_steps=500",
    )
    parser.add_argument("-q", "--quiet", action="store_true", help="suppress progress lines")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="voiceclone", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="build manifest and feature caches for a corpus")
    _add_common(p)
    p.add_argument("--corpus", help="corpus directory (overrides data.corpus_dir)")
    p.add_argument("--out", help="work directory (overrides data.work_dir)")

    p = sub.add_parser("train", help="stage 1: multi-speaker training")
    _add_common(p)

    p = sub.add_parser("adapt", help="stage 2: target-speaker adaptation")
    _add_common(p)
    p.add_argument("--target-speaker", help="overrides adapt.target_speaker")
    p.add_argument("--acoustic-steps", type=int, help="overrides adapt.acoustic_steps")
    p.add_argument("--vocoder-steps", type=int, help="overrides adapt.vocoder_steps")

    p = sub.add_parser("synth", help="stage 3: synthesize WAVs from text")
    _add_common(p)
    p.add_argument("--text", action="append", default=[], help="a text to synthesize (repeatable)")
    p.add_argument("--text-file", help="file with one text per line")
    p.add_argument("--speaker", help="overrides synth.speaker")
    p.add_argument("--checkpoint-dir", help="overrides synth.checkpoint_dir")

    p = sub.add_parser("inspect", help="describe a checkpoint, manifest, or feature cache")
    _add_common(p)
    p.add_argument("artifact", help="path to the artifact")
    return parser


def _config_from_args(args, extra_overrides: list[str]):
    overrides = list(args.overrides) + extra_overrides
    return load_config(args.config, overrides)


def _print(args, line: str) -> None:
    if not args.quiet:
        print(line, flush=True)


def cmd_prepare(args) -> int:
    overrides = []
    if args.corpus:
        overrides.append(f"data.corpus_dir={args.corpus}")
    if args.out:
        overrides.append(f"data.work_dir={args.out}")
    config = _config_from_args(args, overrides)
    config.validate_for("train")
    inventory = data.inventory_from_config(config)
    _, _, summary = data.prepare_corpus(
        config.data.corpus_dir,
        config.features_dir,
        config.mel,
        config.audio,
        inventory,
        manifest_out=config.work_dir / "manifest.jsonl",
    )
    _print(
        args,
        f"utterances={summary.kept} speakers={len(summary.speakers)} "
        f"cache_hits={summary.cache_hits} total_frames={summary.total_frames} "
        f"skipped={len(summary.skipped)}",
    )
    for utt_id, reason in summary.skipped:
        _print(args, f"skipped={utt_id} reason={reason!r}")
    return 0


def cmd_train(args) -> int:
    config = _config_from_args(args, [])
    result = run_stage1_train(config, progress=lambda line: _print(args, line))
    _print(args, f"stage=train status=done record={result.record.config_hash}")
    return 0


def cmd_adapt(args) -> int:
    overrides = []
    if args.target_speaker:
        overrides.append(f"adapt.target_speaker={args.target_speaker}")
    if args.acoustic_steps is not None:
        overrides.append(f"adapt.acoustic_steps={args.acoustic_steps}")
    if args.vocoder_steps is not None:
        overrides.append(f"adapt.vocoder_steps={args.vocoder_steps}")
    config = _config_from_args(args, overrides)
    result = run_stage2_adapt(config, progress=lambda line: _print(args, line))
    losses = result.record.final_losses
    _print(
        args,
        "stage=adapt status=done "
        f"acoustic_pre={losses.get('acoustic_pre_adapt', float('nan')):.4f} "
        f"acoustic_post={losses.get('acoustic_post_adapt', float('nan')):.4f}",
    )
    return 0


def cmd_synth(args) -> int:
    overrides = []
    if args.speaker:
        overrides.append(f"synth.speaker={args.speaker}")
    if args.checkpoint_dir:
        overrides.append(f"synth.checkpoint_dir={args.checkpoint_dir}")
    config = _config_from_args(args, overrides)
    texts = list(args.text)
    if args.text_file:
        lines = Path(args.text_file).read_text(encoding="utf-8").splitlines()
        texts.extend(line for line in lines if line.strip())
    result = run_stage3_synthesize(config, texts, progress=lambda line: _print(args, line))
    _print(
        args,
        f"stage=synth status=done wavs={len(result.wav_paths)} "
        f"errors={len(result.record.errors)}",
    )
    return 0


def cmd_inspect(args) -> int:
    path = Path(args.artifact)
    if not path.exists():
        raise CorruptCheckpoint(f"{path}: no such file")

    head = path.open("rb").read(4)
    if head == b"VCF1":
        from voiceclone.frontend.features import read_array

        array, header = read_array(path)
        print(f"type=feature_cache shape={tuple(array.shape)} dtype={array.dtype}")
        print(f"hop={header.get('hop')} win={header.get('win')}")
        return 0

    if path.suffix == ".jsonl":
        from voiceclone.frontend.manifest import load_manifest

        manifest = load_manifest(path)
        print(f"type=manifest utterances={len(manifest)} speakers={len(manifest.speakers)}")
        for name in manifest.speaker_names:
            print(f"speaker={name} quality={manifest.speakers.get(name)}")
        return 0

    payload = ckpt.load_checkpoint(path)
    print(f"type=checkpoint kind={payload.kind} format_version={ckpt.FORMAT_VERSION}")
    print(f"step={payload.step} config_hash={payload.config_hash}")
    dims = {
        k: v
        for k, v in payload.model_config.items()
        if isinstance(v, (int, float)) and not isinstance(v, bool)
    }
    print("model_config=" + json.dumps(dims, sort_keys=True))
    if payload.kind == ckpt.KIND_ACOUSTIC:
        speakers = payload.extra.get("speaker_map", {})
        print(f"speakers={len(speakers)} inventory={len(payload.extra.get('phone_inventory', []))}")
    return 0


COMMANDS = {
    "prepare": cmd_prepare,
    "train": cmd_train,
    "adapt": cmd_adapt,
    "synth": cmd_synth,
    "inspect": cmd_inspect,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except VoiceCloneError as exc:
        print(f"error: category={exc.category} message={exc}", file=sys.stderr)
        return exit_code_for(exc)


if __name__ == "__main__":
    raise SystemExit(main())
