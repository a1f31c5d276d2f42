"""Finite-state legality masks for constrained decoding of token sequences.

The automaton tracks where a decode stands inside the staged sequence form
and answers "which token categories may come next".  It never scores tokens;
an external next-token provider picks one token from the mask each step.

Two modes mirror the two inference conditions:

* ``AUDIO_ONLY`` decodes the full staged sequence.  Stage one emits free
  lyric words and ends when the provider emits the separator; stage two
  emits the interleaved body.
* ``LYRIC_CONDITIONED`` is given the lyric prefix up front and decodes only
  the interleaved body.

With ``copy_forcing`` enabled (the default) the interleaved stage may only
spell words that copy the lyric prefix in order, so prefix/body drift is
impossible by construction.  Disabling it yields the permissive automaton
that accepts exactly what the parser accepts, drift included.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Iterable, Sequence

from .score import word_text_error
from .tokens import BpmTok, NoteTok, PitchTok, SepTok, Token, WordTok, render_token


class DecodeMode(Enum):
    AUDIO_ONLY = "audio_only"
    LYRIC_CONDITIONED = "lyric_conditioned"


class Phase(Enum):
    LYRIC = "lyric"                   # stage one: free words until a separator
    EXPECT_WORD = "expect_word"       # interleaved stage, no word open yet
    EXPECT_PITCH = "expect_pitch"     # word open with zero pairs so far
    EXPECT_NOTE = "expect_note"       # pitch emitted, its note must follow
    AFTER_PAIR = "after_pair"         # word open with at least one pair
    DONE = "done"


class GrammarError(ValueError):
    """A token outside the current mask, or a step from a finished state."""


@dataclass(frozen=True)
class TokenMask:
    """Which token categories are legal next.

    ``exact_word`` names the single admissible word text when word copying is
    forced; ``any_word`` admits every well-formed word.  The two are never
    both set.
    """

    any_word: bool = False
    exact_word: str | None = None
    pitch: bool = False
    note: bool = False
    bpm: bool = False
    sep: bool = False

    def allows(self, token: Token) -> bool:
        if isinstance(token, WordTok):
            if self.any_word:
                return True
            return self.exact_word is not None and token.text == self.exact_word
        if isinstance(token, PitchTok):
            return self.pitch
        if isinstance(token, NoteTok):
            return self.note
        if isinstance(token, BpmTok):
            return self.bpm
        if isinstance(token, SepTok):
            return self.sep
        return False

    @property
    def empty(self) -> bool:
        return not (self.any_word or self.exact_word is not None or self.pitch
                    or self.note or self.bpm or self.sep)

    def describe(self) -> str:
        parts = []
        if self.any_word:
            parts.append("word")
        if self.exact_word is not None:
            parts.append(f"word {self.exact_word!r}")
        if self.pitch:
            parts.append("pitch")
        if self.note:
            parts.append("note")
        if self.bpm:
            parts.append("bpm")
        if self.sep:
            parts.append("separator")
        return " | ".join(parts) if parts else "nothing"


@dataclass(frozen=True)
class GrammarState:
    """Immutable decoding state; :func:`grammar_step` returns successors.

    ``lyrics`` holds the forced prefix (lyric-conditioned mode) or the words
    emitted so far in stage one (audio-only mode).  ``word_cursor`` counts
    interleaved words consumed; under copy forcing it indexes the next prefix
    word to copy.  ``pending_pitch`` is set exactly while a pitch token waits
    for its note token.
    """

    mode: DecodeMode
    copy_forcing: bool
    phase: Phase
    lyrics: tuple[str, ...]
    word_cursor: int
    pending_pitch: int | None

    @property
    def done(self) -> bool:
        return self.phase is Phase.DONE


def grammar_init(
    mode: DecodeMode,
    forced_lyrics: Sequence[str] | None = None,
    copy_forcing: bool = True,
) -> GrammarState:
    """Initial state for a decode.

    Audio-only mode forbids a forced prefix (the lyric stage is generated);
    lyric-conditioned mode requires a non-empty one and skips straight to the
    interleaved stage.
    """
    if mode is DecodeMode.AUDIO_ONLY:
        if forced_lyrics is not None:
            raise ValueError("audio_only mode does not take forced lyrics")
        return GrammarState(mode, copy_forcing, Phase.LYRIC, (), 0, None)
    if mode is DecodeMode.LYRIC_CONDITIONED:
        if not forced_lyrics:
            raise ValueError("lyric_conditioned mode requires a non-empty lyric prefix")
        for i, text in enumerate(forced_lyrics):
            err = word_text_error(text)
            if err is not None:
                raise ValueError(f"forced lyric {i} ({text!r}): {err}")
        return GrammarState(mode, copy_forcing, Phase.EXPECT_WORD, tuple(forced_lyrics), 0, None)
    raise ValueError(f"unknown decode mode: {mode!r}")


def _next_word_mask(state: GrammarState, *, pitch: bool) -> TokenMask:
    # Continuations once a word may open (or the sequence may close): more
    # pairs for the open word, the next word, or the BPM suffix when every
    # prefix word has been copied.
    if not state.copy_forcing:
        return TokenMask(any_word=True, pitch=pitch, bpm=True)
    if state.word_cursor < len(state.lyrics):
        return TokenMask(exact_word=state.lyrics[state.word_cursor], pitch=pitch)
    return TokenMask(pitch=pitch, bpm=True)


def grammar_allowed(state: GrammarState) -> TokenMask:
    """The legality mask for the next token.

    Raises :class:`GrammarError` for a finished state; for every reachable
    unfinished state the mask is non-empty.
    """
    if state.phase is Phase.DONE:
        raise GrammarError("no continuation from the done state")
    if state.phase is Phase.LYRIC:
        if state.copy_forcing and not state.lyrics:
            # An empty prefix cannot be copied into a non-empty body, so the
            # separator only becomes legal after the first word.
            return TokenMask(any_word=True)
        return TokenMask(any_word=True, sep=True)
    if state.phase is Phase.EXPECT_WORD:
        if not state.copy_forcing:
            return TokenMask(any_word=True)
        return TokenMask(exact_word=state.lyrics[state.word_cursor])
    if state.phase is Phase.EXPECT_PITCH:
        return TokenMask(pitch=True)
    if state.phase is Phase.EXPECT_NOTE:
        return TokenMask(note=True)
    if state.phase is Phase.AFTER_PAIR:
        return _next_word_mask(state, pitch=True)
    raise AssertionError(f"unhandled phase {state.phase!r}")


def grammar_step(state: GrammarState, token: Token) -> GrammarState:
    """Deterministic successor state after consuming ``token``.

    Raises :class:`GrammarError` naming the expected categories when the
    token is outside the current mask.
    """
    mask = grammar_allowed(state)
    if not mask.allows(token):
        raise GrammarError(
            f"token {render_token(token)!r} rejected: expected {mask.describe()}"
        )
    if state.phase is Phase.LYRIC:
        if isinstance(token, WordTok):
            return replace(state, lyrics=state.lyrics + (token.text,))
        return replace(state, phase=Phase.EXPECT_WORD)
    if isinstance(token, WordTok):
        return replace(state, phase=Phase.EXPECT_PITCH, word_cursor=state.word_cursor + 1)
    if isinstance(token, PitchTok):
        return replace(state, phase=Phase.EXPECT_NOTE, pending_pitch=token.midi)
    if isinstance(token, NoteTok):
        return replace(state, phase=Phase.AFTER_PAIR, pending_pitch=None)
    if isinstance(token, BpmTok):
        return replace(state, phase=Phase.DONE)
    raise AssertionError(f"mask admitted unexpected token {token!r}")


def feed(state: GrammarState, tokens: Iterable[Token]) -> GrammarState:
    """Step through ``tokens``, raising on the first rejection."""
    for token in tokens:
        state = grammar_step(state, token)
    return state


def accepts(
    tokens: Sequence[Token],
    mode: DecodeMode = DecodeMode.AUDIO_ONLY,
    forced_lyrics: Sequence[str] | None = None,
    copy_forcing: bool = True,
) -> bool:
    """Whether the automaton consumes all of ``tokens`` and ends done."""
    try:
        state = grammar_init(mode, forced_lyrics, copy_forcing)
        state = feed(state, tokens)
    except (GrammarError, ValueError):
        return False
    return state.done


TokenProvider = Callable[[GrammarState, TokenMask], Token]


def decode(
    provider: TokenProvider,
    mode: DecodeMode,
    forced_lyrics: Sequence[str] | None = None,
    copy_forcing: bool = True,
    max_tokens: int = 100_000,
) -> list[Token]:
    """Run a full constrained decode, returning the emitted token sequence.

    Each step the provider is shown the current state and mask and must
    return a token the mask allows.  The decode ends when the automaton
    reaches the done state (i.e. after the BPM suffix).
    """
    state = grammar_init(mode, forced_lyrics, copy_forcing)
    out: list[Token] = []
    while not state.done:
        mask = grammar_allowed(state)
        if mask.empty:
            raise GrammarError("empty mask before the done state")
        token = provider(state, mask)
        if not mask.allows(token):
            raise GrammarError(
                f"provider returned {render_token(token)!r} outside the mask ({mask.describe()})"
            )
        state = grammar_step(state, token)
        out.append(token)
        if len(out) > max_tokens:
            raise GrammarError(f"decode exceeded {max_tokens} tokens without finishing")
    return out


class ReplayProvider:
    """Deterministic provider that replays a recorded token stream.

    When the mask forces a single exact word, a queued word token is replaced
    by the forced one, the way a hard logit mask overrides a model's word
    choice; everything else must already be legal.  Useful for driving the
    engine from serialized sequences in tests and offline checks.
    """

    def __init__(self, tokens: Iterable[Token]):
        self._queue = deque(tokens)

    def __call__(self, state: GrammarState, mask: TokenMask) -> Token:
        if not self._queue:
            raise GrammarError("replay stream exhausted before the decode finished")
        token = self._queue.popleft()
        if mask.allows(token):
            return token
        if isinstance(token, WordTok) and mask.exact_word is not None:
            return WordTok(mask.exact_word)
        raise GrammarError(
            f"replayed token {render_token(token)!r} outside the mask ({mask.describe()})"
        )
