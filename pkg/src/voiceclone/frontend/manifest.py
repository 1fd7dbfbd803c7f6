"""Corpus manifests.

Expected corpus layout, one directory per speaker:

    corpus/
      speaker_a/
        utt001.wav   utt001.txt   utt001.align
        ...
      speaker_b/
        ...
      quality.json        (optional: {"speaker_a": "high", ...})

A manifest is JSON-lines with fields {id, speaker, text, audio, alignment};
the speaker table lives in a sidecar JSON next to it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from voiceclone.errors import EmptyCorpus

AUDIO_SUFFIX = ".wav"
TEXT_SUFFIX = ".txt"
ALIGNMENT_SUFFIX = ".align"
SPEAKER_TABLE_NAME = "speakers.json"


@dataclass
class UtteranceRecord:
    utterance_id: str
    speaker_id: str
    text: str
    audio_path: str
    alignment_path: str


@dataclass
class Manifest:
    records: list[UtteranceRecord] = field(default_factory=list)
    speakers: dict[str, str] = field(default_factory=dict)  # name -> quality tag
    skipped: list[tuple[str, str]] = field(default_factory=list)  # (utt id, reason)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def speaker_names(self) -> list[str]:
        return sorted(self.speakers)

    def records_for(self, speaker: str) -> list[UtteranceRecord]:
        return [r for r in self.records if r.speaker_id == speaker]

    def filtered(self, speakers: set[str]) -> "Manifest":
        return Manifest(
            [r for r in self.records if r.speaker_id in speakers],
            {s: q for s, q in self.speakers.items() if s in speakers},
        )


def build_manifest(corpus_dir: str | Path) -> Manifest:
    """Scan a corpus directory into a manifest.

    Only utterances with a complete (audio, text, alignment) triple become
    records; incomplete ones are listed in ``skipped``. Speaker names come
    from directory names; quality tags from an optional quality.json.

    Raises:
        EmptyCorpus: no speaker directories, or no complete triple at all.
    """
    corpus = Path(corpus_dir)
    if not corpus.is_dir():
        raise EmptyCorpus(f"{corpus} is not a directory")

    quality: dict[str, str] = {}
    quality_file = corpus / "quality.json"
    if quality_file.exists():
        quality = json.loads(quality_file.read_text(encoding="utf-8"))

    manifest = Manifest()
    speaker_dirs = sorted(d for d in corpus.iterdir() if d.is_dir())
    for speaker_dir in speaker_dirs:
        speaker = speaker_dir.name
        manifest.speakers[speaker] = quality.get(speaker, "high")
        for audio in sorted(speaker_dir.glob(f"*{AUDIO_SUFFIX}")):
            stem = audio.stem
            utt_id = f"{speaker}_{stem}"
            text_path = audio.with_suffix(TEXT_SUFFIX)
            align_path = audio.with_suffix(ALIGNMENT_SUFFIX)
            missing = [p.suffix for p in (text_path, align_path) if not p.exists()]
            if missing:
                manifest.skipped.append((utt_id, f"missing {' and '.join(missing)}"))
                continue
            manifest.records.append(
                UtteranceRecord(
                    utterance_id=utt_id,
                    speaker_id=speaker,
                    text=text_path.read_text(encoding="utf-8").strip(),
                    audio_path=str(audio),
                    alignment_path=str(align_path),
                )
            )

    if not manifest.records:
        raise EmptyCorpus(f"no complete (wav, txt, align) triples under {corpus}")
    return manifest


def save_manifest(manifest: Manifest, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for r in manifest.records:
            fh.write(
                json.dumps(
                    {
                        "id": r.utterance_id,
                        "speaker": r.speaker_id,
                        "text": r.text,
                        "audio": r.audio_path,
                        "alignment": r.alignment_path,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
    sidecar = path.parent / SPEAKER_TABLE_NAME
    sidecar.write_text(json.dumps(manifest.speakers, indent=2, sort_keys=True), encoding="utf-8")


def load_manifest(path: str | Path) -> Manifest:
    path = Path(path)
    manifest = Manifest()
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        row = json.loads(line)
        manifest.records.append(
            UtteranceRecord(row["id"], row["speaker"], row["text"], row["audio"], row["alignment"])
        )
    sidecar = path.parent / SPEAKER_TABLE_NAME
    if sidecar.exists():
        manifest.speakers = json.loads(sidecar.read_text(encoding="utf-8"))
    else:
        manifest.speakers = {r.speaker_id: "high" for r in manifest.records}
    return manifest
