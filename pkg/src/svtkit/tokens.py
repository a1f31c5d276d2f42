"""The plain-text token vocabulary: typed tokens, rendering, and lexing.

The wire form is whitespace-separated chunks, one excerpt per line.  Special
tokens are spelled ``<PITCH_69>``, ``<NOTE_DOT_4>``, ``<BPM_120>`` and
``<SCORE>`` (the stage separator); every other chunk is a lyric word.
Rendering and lexing are exact inverses: ``lex(render(seq)) == seq`` for any
valid sequence, and rendering a lexed string reproduces it up to whitespace.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Union

from .score import (
    BPM_MAX,
    BPM_MIN,
    MIDI_MAX,
    MIDI_MIN,
    NoteValue,
    word_text_error,
)

SEPARATOR_TEXT = "<SCORE>"

_SPECIAL_SHAPE = re.compile(r"^<.*>$", re.DOTALL)
_PITCH_PATTERN = re.compile(r"^<PITCH_(\d+)>$")
_BPM_PATTERN = re.compile(r"^<BPM_(\d+)>$")
_NOTE_BY_TOKEN = {value.token_name: value for value in NoteValue}


@dataclass(frozen=True)
class WordTok:
    """A lyric word token; its text obeys the word-text constraints."""

    text: str

    def __post_init__(self) -> None:
        err = word_text_error(self.text)
        if err is not None:
            raise ValueError(f"invalid word token text {self.text!r}: {err}")


@dataclass(frozen=True)
class PitchTok:
    """One of the 128 MIDI pitch tokens."""

    midi: int

    def __post_init__(self) -> None:
        if not isinstance(self.midi, int) or isinstance(self.midi, bool) or not MIDI_MIN <= self.midi <= MIDI_MAX:
            raise ValueError(f"pitch token index must be in [{MIDI_MIN}, {MIDI_MAX}], got {self.midi!r}")


@dataclass(frozen=True)
class NoteTok:
    """One of the twelve duration-class tokens."""

    value: NoteValue

    def __post_init__(self) -> None:
        if not isinstance(self.value, NoteValue):
            raise ValueError(f"note token needs a NoteValue, got {self.value!r}")


@dataclass(frozen=True)
class BpmTok:
    """The song-level tempo token (appears once, as a suffix)."""

    bpm: int

    def __post_init__(self) -> None:
        if not isinstance(self.bpm, int) or isinstance(self.bpm, bool) or not BPM_MIN <= self.bpm <= BPM_MAX:
            raise ValueError(f"bpm token value must be in [{BPM_MIN}, {BPM_MAX}], got {self.bpm!r}")


@dataclass(frozen=True)
class SepTok:
    """Separator between the pure-lyric stage and the interleaved stage."""


Token = Union[WordTok, PitchTok, NoteTok, BpmTok, SepTok]
TokenSequence = list[Token]


class LexError(ValueError):
    """Lexing failure, carrying the offending chunk and its byte offset."""

    def __init__(self, message: str, chunk: str, byte_offset: int):
        self.chunk = chunk
        self.byte_offset = byte_offset
        super().__init__(f"byte {byte_offset}: {message} ({chunk!r})")


def render_token(token: Token) -> str:
    """Canonical text spelling of a single token."""
    if isinstance(token, WordTok):
        return token.text
    if isinstance(token, PitchTok):
        return f"<PITCH_{token.midi}>"
    if isinstance(token, NoteTok):
        return token.value.token_name
    if isinstance(token, BpmTok):
        return f"<BPM_{token.bpm}>"
    if isinstance(token, SepTok):
        return SEPARATOR_TEXT
    raise TypeError(f"not a token: {token!r}")


def render_sequence(tokens: Iterable[Token]) -> str:
    """Render a token sequence as a single space-separated line."""
    return " ".join(render_token(t) for t in tokens)


def _lex_special(chunk: str, offset: int) -> Token:
    if chunk == SEPARATOR_TEXT:
        return SepTok()
    m = _PITCH_PATTERN.match(chunk)
    if m:
        digits = m.group(1)
        if str(int(digits)) != digits:
            raise LexError("non-canonical pitch index", chunk, offset)
        midi = int(digits)
        if not MIDI_MIN <= midi <= MIDI_MAX:
            raise LexError("pitch index out of range", chunk, offset)
        return PitchTok(midi)
    m = _BPM_PATTERN.match(chunk)
    if m:
        digits = m.group(1)
        if str(int(digits)) != digits:
            raise LexError("non-canonical bpm value", chunk, offset)
        bpm = int(digits)
        if not BPM_MIN <= bpm <= BPM_MAX:
            raise LexError("bpm value out of range", chunk, offset)
        return BpmTok(bpm)
    if chunk in _NOTE_BY_TOKEN:
        return NoteTok(_NOTE_BY_TOKEN[chunk])
    raise LexError("unknown special token", chunk, offset)


def lex(text: str) -> TokenSequence:
    """Split a line of token text into typed tokens.

    Chunks are separated by runs of whitespace.  A chunk of the shape
    ``<...>`` must be a known special token; anything else becomes a word.
    Errors report the byte offset of the offending chunk in the UTF-8
    encoding of ``text``.
    """
    tokens: TokenSequence = []
    for match in re.finditer(r"\S+", text):
        chunk = match.group(0)
        offset = len(text[: match.start()].encode("utf-8"))
        if _SPECIAL_SHAPE.match(chunk):
            tokens.append(_lex_special(chunk, offset))
        else:
            # Any other whitespace-free chunk is a valid word by construction.
            tokens.append(WordTok(chunk))
    return tokens
