"""Structured transcription scores and the symbolic note-duration vocabulary.

A score is a global tempo plus an ordered list of sung words, each carrying
one or more (pitch, duration-class) notes.  A word with a single note is the
ordinary one-to-one case; a word with several notes is a melisma.  All types
here are immutable value objects; construction is permissive and invariant
checking lives in :func:`validate_score`, so malformed data read from disk
can still be represented and diagnosed.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

BPM_MIN = 60
BPM_MAX = 190
MIDI_MIN = 0
MIDI_MAX = 127

_RESERVED_SHAPE = re.compile(r"^<.*>$", re.DOTALL)
_WHITESPACE = re.compile(r"\s")


class NoteValue(Enum):
    """The twelve symbolic duration classes, thirty-second note to dotted whole.

    Each member's value is its length in quarter-note units, kept as an exact
    rational so downstream log-ratio computations are stable.  Members are
    declared in ascending length order; code that breaks ties "toward the
    shorter class" relies on this iteration order.
    """

    N32 = Fraction(1, 8)
    DOT32 = Fraction(3, 16)
    N16 = Fraction(1, 4)
    DOT16 = Fraction(3, 8)
    N8 = Fraction(1, 2)
    DOT8 = Fraction(3, 4)
    N4 = Fraction(1, 1)
    DOT4 = Fraction(3, 2)
    N2 = Fraction(2, 1)
    DOT2 = Fraction(3, 1)
    N1 = Fraction(4, 1)
    DOT1 = Fraction(6, 1)

    @property
    def multiplier(self) -> Fraction:
        """Length in quarter-note units."""
        return self.value

    @property
    def dotted(self) -> bool:
        return self.name.startswith("DOT")

    @property
    def undotted(self) -> "NoteValue":
        """The plain class with the same base figure (self if not dotted)."""
        if not self.dotted:
            return self
        return NoteValue[f"N{self.name[3:]}"]

    @property
    def token_name(self) -> str:
        """Canonical token spelling, e.g. ``<NOTE_8>`` or ``<NOTE_DOT_4>``."""
        if self.dotted:
            return f"<NOTE_DOT_{self.name[3:]}>"
        return f"<NOTE_{self.name[1:]}>"


def multiplier(value: NoteValue) -> Fraction:
    """Quarter-note multiplier of a duration class (total over the enum)."""
    return value.multiplier


def nominal_duration(value: NoteValue, bpm: int) -> float:
    """Absolute duration in seconds of a duration class at a given tempo.

    Raises ValueError if ``bpm`` lies outside [60, 190].
    """
    if not isinstance(bpm, int) or isinstance(bpm, bool) or not BPM_MIN <= bpm <= BPM_MAX:
        raise ValueError(f"bpm must be an integer in [{BPM_MIN}, {BPM_MAX}], got {bpm!r}")
    return (60.0 / bpm) * float(value.multiplier)


def word_text_error(text: str) -> str | None:
    """Why ``text`` is unusable as a word, or None if it is fine.

    Word text must be non-empty, contain no whitespace, and must not take the
    reserved ``<...>`` shape used by special tokens, so that the plain-text
    token format stays unambiguous.
    """
    if not isinstance(text, str) or not text:
        return "empty"
    if _WHITESPACE.search(text):
        return "contains whitespace"
    if _RESERVED_SHAPE.match(text):
        return "uses the reserved <...> token shape"
    return None


@dataclass(frozen=True)
class Note:
    """One sung note: a MIDI pitch paired with a symbolic duration class."""

    pitch: int
    value: NoteValue


@dataclass(frozen=True)
class WordEntry:
    """A lyric word with its ordered notes (more than one note is melisma)."""

    text: str
    notes: tuple[Note, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "notes", tuple(self.notes))


@dataclass(frozen=True)
class Score:
    """A complete transcription: global tempo plus ordered word entries."""

    bpm: int
    words: tuple[WordEntry, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "words", tuple(self.words))


class ValidationError(ValueError):
    """Raised when an operation requires a valid score but got violations."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(violations))


def _is_int(x: object) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def validate_score(score: Score) -> list[str]:
    """Collect every invariant violation in ``score``.

    Returns an empty list for a well-formed score.  Each entry names the path
    of the offending element, e.g. ``words[1].notes: empty``.  Violations are
    data, not exceptions; use :func:`ensure_valid` to raise instead.
    """
    violations: list[str] = []
    if not _is_int(score.bpm) or not BPM_MIN <= score.bpm <= BPM_MAX:
        violations.append(f"bpm: {score.bpm!r} outside [{BPM_MIN}, {BPM_MAX}]")
    if not score.words:
        violations.append("words: empty (a score needs at least one word)")
    for i, word in enumerate(score.words):
        err = word_text_error(word.text)
        if err is not None:
            violations.append(f"words[{i}].text: {word.text!r} {err}")
        if not word.notes:
            violations.append(f"words[{i}].notes: empty (each word needs at least one note)")
        for j, note in enumerate(word.notes):
            if not _is_int(note.pitch) or not MIDI_MIN <= note.pitch <= MIDI_MAX:
                violations.append(
                    f"words[{i}].notes[{j}].pitch: {note.pitch!r} outside [{MIDI_MIN}, {MIDI_MAX}]"
                )
            if not isinstance(note.value, NoteValue):
                violations.append(f"words[{i}].notes[{j}].value: {note.value!r} is not a duration class")
    return violations


def ensure_valid(score: Score) -> Score:
    """Return ``score`` unchanged, raising :class:`ValidationError` if invalid."""
    violations = validate_score(score)
    if violations:
        raise ValidationError(violations)
    return score


def total_note_count(score: Score) -> int:
    """Total number of notes across all words."""
    return sum(len(word.notes) for word in score.words)
