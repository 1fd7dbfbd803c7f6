"""Synthetic miniature corpora for demos and end-to-end tests.

Each fake phone is a small stack of harmonics at a distinctive base
frequency; speakers differ by a pitch multiplier and their harmonic
weights, so phone identity and speaker identity are both learnable from
the audio. Alignments are exact by construction (intervals land on
sample boundaries), and texts use one grapheme per phone with commas
for short pauses.

Usage: ``python3 -m voiceclone.toy_corpus OUT_DIR`` or call
:func:`make_toy_corpus` / :func:`write_toy_lexicon` directly.
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

import numpy as np

from voiceclone.frontend.alignment import AlignmentTier, Interval, serialize_alignment
from voiceclone.frontend.audio import Waveform, save_wav
from voiceclone.frontend.phones import SIL, SP

SAMPLE_RATE = 22050

PHONE_FREQS = {
    "aa": 220.0,
    "ee": 311.1,
    "ii": 415.3,
    "oo": 523.3,
    "uu": 622.3,
}
GRAPHEME_TO_PHONE = {"a": "aa", "e": "ee", "i": "ii", "o": "oo", "u": "uu"}
PHONE_TO_GRAPHEME = {p: g for g, p in GRAPHEME_TO_PHONE.items()}


def write_toy_lexicon(path: str | Path) -> Path:
    path = Path(path)
    lines = [f"{g}\t{p}" for g, p in GRAPHEME_TO_PHONE.items()]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _speaker_voice(index: int) -> tuple[float, np.ndarray]:
    """Pitch multiplier and harmonic weights for the index-th speaker."""
    rng = np.random.default_rng(1000 + index)
    pitch = 0.8 + 0.25 * index + rng.uniform(-0.05, 0.05)
    weights = rng.uniform(0.15, 1.0, size=3)
    weights = weights / weights.sum()
    return pitch, weights


def _render_phone(phone: str, num_samples: int, pitch: float, weights: np.ndarray) -> np.ndarray:
    if phone in (SIL, SP):
        return np.zeros(num_samples)
    t = np.arange(num_samples) / SAMPLE_RATE
    base = PHONE_FREQS[phone] * pitch
    signal = sum(
        w * np.sin(2 * np.pi * base * (h + 1) * t) for h, w in enumerate(weights)
    )
    ramp = min(num_samples // 4, int(0.005 * SAMPLE_RATE))
    envelope = np.ones(num_samples)
    if ramp > 0:
        fade = np.linspace(0.0, 1.0, ramp)
        envelope[:ramp] = fade
        envelope[-ramp:] = fade[::-1]
    return 0.4 * signal * envelope


def _random_utterance(rng: np.random.Generator) -> list[tuple[str, int]]:
    """Phone plan: (symbol, duration in samples), silence-padded."""
    plan = [(SIL, int(rng.uniform(0.06, 0.14) * SAMPLE_RATE))]
    num_phones = int(rng.integers(4, 9))
    for i in range(num_phones):
        if i > 0 and rng.random() < 0.25:
            plan.append((SP, int(rng.uniform(0.04, 0.09) * SAMPLE_RATE)))
        phone = str(rng.choice(list(PHONE_FREQS)))
        plan.append((phone, int(rng.uniform(0.08, 0.2) * SAMPLE_RATE)))
    plan.append((SIL, int(rng.uniform(0.06, 0.14) * SAMPLE_RATE)))
    return plan


def _plan_to_text(plan: list[tuple[str, int]]) -> str:
    parts = []
    for phone, _ in plan:
        if phone == SIL:
            continue
        parts.append("," if phone == SP else PHONE_TO_GRAPHEME[phone])
    return "".join(parts)


def make_toy_corpus(
    out_dir: str | Path,
    speakers: dict[str, int] | list[str] = ("spk_a", "spk_b"),
    utterances_per_speaker: int = 20,
    seed: int = 0,
    low_quality_speakers: tuple[str, ...] = (),
) -> Path:
    """Write a complete corpus (wav/txt/align per utterance) and return its root.

    ``speakers`` maps names to voice indices (or lists names, indexed in
    order); voice index drives pitch and timbre.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not isinstance(speakers, dict):
        speakers = {name: i for i, name in enumerate(speakers)}

    rng = np.random.default_rng(seed)
    for name, voice_index in speakers.items():
        pitch, weights = _speaker_voice(voice_index)
        speaker_dir = out / name
        speaker_dir.mkdir(exist_ok=True)
        for n in range(utterances_per_speaker):
            plan = _random_utterance(rng)
            chunks = [
                _render_phone(phone, samples, pitch, weights) for phone, samples in plan
            ]
            audio = np.concatenate(chunks).astype(np.float32)

            boundaries = np.cumsum([0] + [samples for _, samples in plan])
            tier = AlignmentTier(
                [
                    Interval(phone, boundaries[i] / SAMPLE_RATE, boundaries[i + 1] / SAMPLE_RATE)
                    for i, (phone, _) in enumerate(plan)
                ]
            )
            stem = speaker_dir / f"utt{n:03d}"
            save_wav(stem.with_suffix(".wav"), Waveform(audio, SAMPLE_RATE))
            stem.with_suffix(".txt").write_text(_plan_to_text(plan) + "\n", encoding="utf-8")
            serialize_alignment(tier, stem.with_suffix(".align"))

    if low_quality_speakers:
        quality = {name: "low" if name in low_quality_speakers else "high" for name in speakers}
        (out / "quality.json").write_text(json.dumps(quality, indent=2), encoding="utf-8")
    return out


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="Generate a synthetic toy corpus")
    parser.add_argument("out_dir", help="directory to create the corpus in")
    parser.add_argument("--speakers", nargs="+", default=["spk_a", "spk_b"])
    parser.add_argument("--utterances", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--lexicon", help="also write a matching lexicon file here")
    args = parser.parse_args(argv)
    make_toy_corpus(args.out_dir, args.speakers, args.utterances, args.seed)
    if args.lexicon:
        write_toy_lexicon(args.lexicon)
    print(f"corpus={args.out_dir} speakers={len(args.speakers)} utterances={args.utterances}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
