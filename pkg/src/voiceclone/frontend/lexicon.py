"""Grapheme-to-phone lexicon and text normalization.

A lexicon file maps grapheme tokens to phone strings, one entry per line:

    grapheme<TAB>phone phone ...

Punctuation tokens map to the short-pause symbol SP; they can be listed
in the file with SP as their only phone, or passed to the constructor.
Text is matched greedily (longest entry first), so multi-character
graphemes work alongside single characters.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from voiceclone.errors import UnknownGrapheme
from voiceclone.frontend.phones import SIL, SP, PhoneInventory, PhoneSequence

DEFAULT_PUNCTUATION = frozenset(",.!?;:、。，！？；：…—\"'()（）[]")


@dataclass
class Lexicon:
    entries: dict[str, list[str]] = field(default_factory=dict)
    punctuation: set[str] = field(default_factory=set)

    def __post_init__(self):
        # entries whose expansion is exactly [SP] are punctuation in disguise
        for grapheme, phones in list(self.entries.items()):
            if phones == [SP]:
                self.punctuation.add(grapheme)
                del self.entries[grapheme]
        self._max_token_len = max((len(g) for g in self.entries), default=1)

    @classmethod
    def from_file(cls, path: str | Path, punctuation: set[str] | None = None) -> "Lexicon":
        entries: dict[str, list[str]] = {}
        for raw in Path(path).read_text(encoding="utf-8").splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            grapheme, _, phone_part = line.partition("\t")
            if not phone_part:
                # tolerate space-separated files
                parts = line.split()
                grapheme, phone_part = parts[0], " ".join(parts[1:])
            entries[grapheme] = phone_part.split()
        punct = set(DEFAULT_PUNCTUATION if punctuation is None else punctuation)
        return cls(entries, punct)

    def phone_inventory(self) -> PhoneInventory:
        symbols: list[str] = []
        for phones in self.entries.values():
            symbols.extend(phones)
        return PhoneInventory(symbols)


def text_to_phones(
    text: str,
    lexicon: Lexicon,
    *,
    add_boundary_silence: bool = False,
) -> PhoneSequence:
    """Convert text into a phone sequence via the lexicon.

    Grapheme tokens are matched greedily from left to right; whitespace
    separates tokens but emits nothing. Punctuation becomes a single SP
    and runs of SP collapse to one. With ``add_boundary_silence`` the
    sequence is wrapped in SIL, matching how alignments begin and end.

    Raises:
        UnknownGrapheme: token absent from both entries and punctuation.
        ValueError: text empty after stripping.
    """
    if not text.strip():
        raise ValueError("text is empty after whitespace stripping")

    symbols: list[str] = []
    i = 0
    n = len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        match = None
        for width in range(min(lexicon._max_token_len, n - i), 0, -1):
            candidate = text[i : i + width]
            if candidate in lexicon.entries:
                match = candidate
                symbols.extend(lexicon.entries[candidate])
                break
        if match is None:
            if text[i] in lexicon.punctuation:
                if not symbols or symbols[-1] != SP:
                    symbols.append(SP)
                match = text[i]
            else:
                raise UnknownGrapheme(text[i], i)
        i += len(match)

    # entries may expand to phone lists containing SP themselves
    collapsed = [s for k, s in enumerate(symbols) if s != SP or k == 0 or symbols[k - 1] != SP]
    if add_boundary_silence:
        collapsed = [SIL, *collapsed, SIL]
    return PhoneSequence.from_symbols(collapsed)
