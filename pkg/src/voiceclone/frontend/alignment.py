"""Forced-alignment tiers and their conversion to per-phone frame counts.

Alignment files are plain text, one interval per line:

    start_sec<TAB>end_sec<TAB>phone

Seconds are written with at least 4 decimals; any whitespace is accepted
when reading. Intervals must be sorted, non-overlapping and positive.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from voiceclone.errors import (
    InfeasibleDurations,
    MalformedAlignment,
    OverlappingIntervals,
)
from voiceclone.frontend.phones import PhoneInventory, PhoneSequence

# slack for float noise when checking interval adjacency
_OVERLAP_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Interval:
    phone: str
    start: float
    end: float

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass
class AlignmentTier:
    intervals: list[Interval]

    def __len__(self) -> int:
        return len(self.intervals)

    @property
    def phone_sequence(self) -> PhoneSequence:
        return PhoneSequence.from_symbols(iv.phone for iv in self.intervals)

    @property
    def total_duration(self) -> float:
        return self.intervals[-1].end if self.intervals else 0.0

    def validate(self, inventory: PhoneInventory | None = None) -> None:
        if not self.intervals:
            raise MalformedAlignment("tier has no intervals")
        prev_end = None
        for iv in self.intervals:
            if not (iv.start < iv.end):
                raise MalformedAlignment(f"non-positive interval {iv.phone} [{iv.start}, {iv.end}]")
            if prev_end is not None and iv.start < prev_end - _OVERLAP_TOLERANCE:
                raise OverlappingIntervals(
                    f"interval {iv.phone} starts at {iv.start} before previous end {prev_end}"
                )
            prev_end = iv.end
        if inventory is not None:
            for iv in self.intervals:
                if iv.phone not in inventory:
                    raise MalformedAlignment(f"phone {iv.phone!r} not in inventory")


def parse_alignment(path: str | Path, inventory: PhoneInventory | None = None) -> AlignmentTier:
    """Read an alignment tier file and validate its invariants.

    Raises:
        MalformedAlignment: empty file, wrong field count, unparsable
            numbers, or symbols outside ``inventory`` when one is given.
        OverlappingIntervals: intervals out of order or overlapping.
    """
    intervals: list[Interval] = []
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 3:
            raise MalformedAlignment(f"expected 3 fields, got {len(fields)}", line_no)
        try:
            start, end = float(fields[0]), float(fields[1])
        except ValueError:
            raise MalformedAlignment(f"unparsable time in {line!r}", line_no) from None
        intervals.append(Interval(fields[2], start, end))
    tier = AlignmentTier(intervals)
    tier.validate(inventory)
    return tier


def serialize_alignment(tier: AlignmentTier, path: str | Path) -> None:
    """Write a tier so that parsing it back reproduces the tier exactly."""
    lines = [
        f"{_format_seconds(iv.start)}\t{_format_seconds(iv.end)}\t{iv.phone}"
        for iv in tier.intervals
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _format_seconds(value: float) -> str:
    # shortest decimal that round-trips, zero-padded to >= 4 decimals
    text = np.format_float_positional(value, unique=True, trim="0")
    whole, _, frac = text.partition(".")
    return f"{whole}.{frac.ljust(4, '0')}"


def durations_to_frames(
    tier: AlignmentTier,
    hop: int,
    sample_rate: int,
    target_frames: int,
) -> np.ndarray:
    """Convert interval durations in seconds to integer frame counts.

    Each real-valued count ``duration * sample_rate / hop`` is rounded to
    the nearest integer and clamped to >= 1, then a largest-remainder pass
    moves single frames until the counts sum exactly to ``target_frames``.

    Returns:
        int64 array, one count per interval, every entry >= 1 and summing
        to ``target_frames``.

    Raises:
        InfeasibleDurations: more phones than target frames.
        MalformedAlignment: empty tier.
    """
    n = len(tier)
    if n == 0:
        raise MalformedAlignment("tier has no intervals")
    if n > target_frames:
        raise InfeasibleDurations(f"{n} phones cannot fill {target_frames} frames")

    exact = np.array([iv.duration for iv in tier.intervals], dtype=np.float64)
    exact *= sample_rate / hop
    counts = np.maximum(np.rint(exact).astype(np.int64), 1)

    # largest-remainder reconciliation: spend the deficit on the phones
    # shortest-changed relative to their exact value (ties broken by index)
    while counts.sum() != target_frames:
        residual = exact - counts
        if counts.sum() < target_frames:
            counts[np.argmax(residual)] += 1
        else:
            order = np.argsort(residual, kind="stable")
            for idx in order:
                if counts[idx] > 1:
                    counts[idx] -= 1
                    break
            else:  # pragma: no cover - guarded by the feasibility check
                raise InfeasibleDurations("all counts already at the minimum of 1")
    return counts
