"""Lossless codec between scores and the three token sequence forms.

Three serializations exist:

* lyrics only: ``w_1 ... w_N``
* interleaved: each word immediately followed by its (pitch, note) pairs,
  with a single BPM token as suffix
* staged ("cot"): the lyric sequence, a ``<SCORE>`` separator, then the
  interleaved sequence

Parsing is the exact inverse.  Every parse error carries the index of the
offending token; truncation errors (input ended too early) carry the index
one past the end, so a caller can distinguish "this prefix can never be
completed" from "this prefix merely needs more tokens".
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .score import Note, Score, WordEntry, ensure_valid
from .tokens import (
    BpmTok,
    NoteTok,
    PitchTok,
    SepTok,
    Token,
    WordTok,
    render_token,
)


class ParseError(ValueError):
    """Token-stream parse failure at a known position.

    ``index`` points at the offending token, or one past the last token when
    the sequence ended before it could be completed.
    """

    def __init__(self, message: str, index: int):
        self.index = index
        super().__init__(f"token {index}: {message}")


@dataclass(frozen=True)
class ConsistencyReport:
    """Position-wise comparison of a lyric prefix against interleaved words.

    ``length_delta`` is (prefix length - interleaved word count); mismatches
    list (index, prefix word, interleaved word) up to the shorter length.
    """

    length_delta: int
    mismatches: tuple[tuple[int, str, str], ...]

    @property
    def consistent(self) -> bool:
        return self.length_delta == 0 and not self.mismatches

    def summary(self) -> str:
        if self.consistent:
            return "consistent"
        parts = []
        if self.length_delta:
            parts.append(f"length_delta={self.length_delta:+d}")
        parts.extend(f"{i}:{ref!r}->{hyp!r}" for i, ref, hyp in self.mismatches)
        return " ".join(parts)


def serialize_lyrics(score: Score) -> list[Token]:
    """Word tokens only, in order."""
    ensure_valid(score)
    return [WordTok(word.text) for word in score.words]


def serialize_interleaved(score: Score) -> list[Token]:
    """Interleaved form: word, its pitch/note pairs, ..., BPM suffix.

    Length is N + 2*(total notes) + 1.
    """
    ensure_valid(score)
    tokens: list[Token] = []
    for word in score.words:
        tokens.append(WordTok(word.text))
        for note in word.notes:
            tokens.append(PitchTok(note.pitch))
            tokens.append(NoteTok(note.value))
    tokens.append(BpmTok(score.bpm))
    return tokens


def serialize_cot(score: Score) -> list[Token]:
    """Staged form: lyrics, ``<SCORE>`` separator, then the interleaved body."""
    return [*serialize_lyrics(score), SepTok(), *serialize_interleaved(score)]


def parse_interleaved(tokens: Sequence[Token], _offset: int = 0) -> Score:
    """Parse an interleaved sequence back into a score.

    The grammar, checked in one left-to-right pass: the sequence opens with a
    word token; every pitch token is immediately followed by a note token;
    every word owns at least one pair; exactly one BPM token ends the
    sequence.  ``_offset`` shifts reported error indices when the sequence is
    embedded in a longer stream.
    """
    words: list[WordEntry] = []
    current_text: str | None = None
    current_notes: list[Note] = []
    pending_pitch: int | None = None
    bpm: int | None = None

    for i, token in enumerate(tokens):
        pos = _offset + i
        if bpm is not None:
            raise ParseError(f"unexpected {render_token(token)!r} after the BPM suffix", pos)
        if isinstance(token, WordTok):
            if pending_pitch is not None:
                raise ParseError("expected a note token after a pitch token", pos)
            if current_text is not None:
                if not current_notes:
                    raise ParseError(f"word {current_text!r} has zero notes", pos)
                words.append(WordEntry(current_text, tuple(current_notes)))
            current_text = token.text
            current_notes = []
        elif isinstance(token, PitchTok):
            if current_text is None:
                raise ParseError("pitch token before any word token", pos)
            if pending_pitch is not None:
                raise ParseError("expected a note token after a pitch token", pos)
            pending_pitch = token.midi
        elif isinstance(token, NoteTok):
            if pending_pitch is None:
                raise ParseError("note token without a preceding pitch token", pos)
            current_notes.append(Note(pending_pitch, token.value))
            pending_pitch = None
        elif isinstance(token, BpmTok):
            if current_text is None:
                raise ParseError("BPM token before any word", pos)
            if pending_pitch is not None:
                raise ParseError("expected a note token after a pitch token", pos)
            if not current_notes:
                raise ParseError(f"word {current_text!r} has zero notes", pos)
            words.append(WordEntry(current_text, tuple(current_notes)))
            bpm = token.bpm
        elif isinstance(token, SepTok):
            raise ParseError("separator token inside an interleaved sequence", pos)
        else:
            raise ParseError(f"unrecognized token {token!r}", pos)

    end = _offset + len(tokens)
    if bpm is None:
        if not tokens:
            raise ParseError("empty token sequence", end)
        if pending_pitch is not None:
            raise ParseError("expected a note token after a pitch token", end)
        if current_text is not None and not current_notes:
            raise ParseError(f"word {current_text!r} has zero notes", end)
        raise ParseError("missing BPM suffix", end)
    return Score(bpm=bpm, words=tuple(words))


def parse_cot(tokens: Sequence[Token]) -> tuple[list[str], Score, ConsistencyReport]:
    """Parse a staged sequence into (lyric prefix, score, consistency report).

    The prefix before the first separator must be word tokens only; the
    suffix is parsed as an interleaved sequence.  The report compares the
    prefix against the interleaved words but does not fail the parse: drift
    between the two stages is data for the caller.
    """
    lyrics: list[str] = []
    sep_index: int | None = None
    for i, token in enumerate(tokens):
        if isinstance(token, SepTok):
            sep_index = i
            break
        if isinstance(token, WordTok):
            lyrics.append(token.text)
        else:
            raise ParseError(
                f"expected a word or separator in the lyric stage, got {render_token(token)!r}", i
            )
    if sep_index is None:
        raise ParseError("missing <SCORE> separator", len(tokens))
    score = parse_interleaved(tokens[sep_index + 1 :], _offset=sep_index + 1)
    return lyrics, score, check_consistency(lyrics, score)


def check_consistency(prefix: Sequence[str], score: Score) -> ConsistencyReport:
    """Compare a lyric prefix with a score's words, position by position."""
    words = [w.text for w in score.words]
    mismatches = tuple(
        (i, ref, hyp)
        for i, (ref, hyp) in enumerate(zip(prefix, words))
        if ref != hyp
    )
    return ConsistencyReport(length_delta=len(prefix) - len(words), mismatches=mismatches)
