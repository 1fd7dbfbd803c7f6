"""Error taxonomy shared across the package.

Every error carries a ``category`` string that the CLI maps to a stable
exit code, so scripted callers can branch on failure class without
parsing messages.
"""


class VoiceCloneError(Exception):
    """Base class for all package errors."""

    category = "internal"


# --- text front-end ---------------------------------------------------------

class UnknownGrapheme(VoiceCloneError):
    """A token is in neither the lexicon entries nor the punctuation set."""

    category = "text"

    def __init__(self, token: str, position: int):
        super().__init__(f"unknown grapheme {token!r} at position {position}")
        self.token = token
        self.position = position


# --- alignment / durations --------------------------------------------------

class MalformedAlignment(VoiceCloneError):
    category = "alignment"

    def __init__(self, detail: str, line_no: int | None = None):
        where = f" (line {line_no})" if line_no is not None else ""
        super().__init__(f"malformed alignment{where}: {detail}")
        self.line_no = line_no


class OverlappingIntervals(VoiceCloneError):
    category = "alignment"


class InfeasibleDurations(VoiceCloneError):
    """More phones than target frames: cannot give every phone one frame."""

    category = "alignment"


# --- audio ------------------------------------------------------------------

class UnsupportedFormat(VoiceCloneError):
    category = "audio"


class EmptyAudio(VoiceCloneError):
    category = "audio"


class AudioTooShort(VoiceCloneError):
    category = "audio"


# --- corpus -----------------------------------------------------------------

class EmptyCorpus(VoiceCloneError):
    category = "corpus"


class EmptyTargetCorpus(VoiceCloneError):
    category = "corpus"


class EmptyAdaptationSet(VoiceCloneError):
    category = "corpus"


# --- models -----------------------------------------------------------------

class IndexOutOfVocab(VoiceCloneError):
    category = "model"


class LengthMismatch(VoiceCloneError):
    category = "model"


class ShapeMismatch(VoiceCloneError):
    category = "model"


class ZeroDuration(VoiceCloneError):
    category = "model"


class MisalignedPair(VoiceCloneError):
    """Waveform sample count disagrees with mel frame count x hop size."""

    category = "model"


# --- persistence / configuration --------------------------------------------

class ConfigInvalid(VoiceCloneError):
    category = "config"


class MissingCheckpoint(VoiceCloneError):
    category = "checkpoint"


class CorruptCheckpoint(VoiceCloneError):
    category = "checkpoint"


class VersionMismatch(VoiceCloneError):
    category = "checkpoint"


class ConfigHashMismatch(VoiceCloneError):
    """Checkpoint was produced under a different resolved configuration."""

    category = "checkpoint"


class StageLocked(VoiceCloneError):
    """Another live process holds the output directory lock."""

    category = "config"


# Exit code per error category; 0 is success, 1 is an unexpected crash,
# 2 is argparse usage error.
EXIT_CODES = {
    "text": 3,
    "alignment": 3,
    "audio": 3,
    "corpus": 4,
    "config": 5,
    "checkpoint": 6,
    "model": 7,
    "internal": 1,
}


def exit_code_for(err: BaseException) -> int:
    if isinstance(err, VoiceCloneError):
        return EXIT_CODES.get(err.category, 1)
    return 1
