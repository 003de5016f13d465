"""Per-output taint state and disjoint-interval arithmetic on satoshis.

One mark kind per strategy family:

* FullMark      whole output tainted (all-or-nothing tracking)
* FractionMark  exact rational share of the output (proportional tracking)
* SegmentsMark  disjoint half-open satoshi intervals (order-based tracking)
* AmountMark    a satoshi amount inside the output (value-priority tracking)

Clean outputs carry no mark (None). Zero-taint marks are never constructed,
so "marked" always means "carries positive taint".
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

Segment = tuple[int, int]


def normalize_segments(segments) -> tuple[Segment, ...]:
    """Sort, merge overlapping or touching intervals, drop empties."""
    live = sorted((a, b) for a, b in segments if b > a)
    merged: list[list[int]] = []
    for a, b in live:
        if merged and a <= merged[-1][1]:
            if b > merged[-1][1]:
                merged[-1][1] = b
        else:
            merged.append([a, b])
    return tuple((a, b) for a, b in merged)


def segments_total(segments) -> int:
    return sum(b - a for a, b in segments)


def shift_segments(segments, offset: int) -> tuple[Segment, ...]:
    return tuple((a + offset, b + offset) for a, b in segments)


def clip_segments(segments, lo: int, hi: int) -> tuple[Segment, ...]:
    """Intersect with [lo, hi) and rebase so the window starts at 0."""
    out = []
    for a, b in segments:
        a2, b2 = max(a, lo), min(b, hi)
        if b2 > a2:
            out.append((a2 - lo, b2 - lo))
    return tuple(out)


@dataclass(frozen=True, slots=True)
class FullMark:
    """The entire output value is tainted."""


@dataclass(frozen=True, slots=True)
class FractionMark:
    """An exact rational share of the output value is tainted."""

    fraction: Fraction

    def __post_init__(self):
        if not isinstance(self.fraction, Fraction):
            object.__setattr__(self, "fraction", Fraction(self.fraction))
        if not 0 < self.fraction <= 1:
            raise ValueError(f"fraction must be in (0, 1], got {self.fraction}")


@dataclass(frozen=True, slots=True)
class SegmentsMark:
    """Tainted satoshi intervals within the output's local [0, value)."""

    segments: tuple[Segment, ...]

    def __post_init__(self):
        object.__setattr__(self, "segments", normalize_segments(self.segments))
        if not self.segments:
            raise ValueError("segments mark must carry at least one interval")
        if self.segments[0][0] < 0:
            raise ValueError("segments must start at or after 0")


@dataclass(frozen=True, slots=True)
class AmountMark:
    """A flat tainted satoshi amount within the output."""

    amount: int

    def __post_init__(self):
        if self.amount <= 0:
            raise ValueError("amount mark must be positive")


Mark = FullMark | FractionMark | SegmentsMark | AmountMark


def taint_value(mark: Mark | None, value: int) -> int | Fraction:
    """Tainted satoshis a mark represents on an output of the given value.

    Exact: integers for full/segments/amount marks, a Fraction for
    proportional marks. Clean (None) is 0.
    """
    if mark is None:
        return 0
    if isinstance(mark, FullMark):
        return value
    if isinstance(mark, FractionMark):
        return mark.fraction * value
    if isinstance(mark, SegmentsMark):
        return segments_total(mark.segments)
    if isinstance(mark, AmountMark):
        return mark.amount
    raise TypeError(f"not a taint mark: {mark!r}")
