"""Tempo estimation from note durations, note cleanup, and quantization.

The estimator assumes each observed duration is approximately a standard
note multiplier times the quarter-note period.  It seeds the period from a
duration histogram, refines it by alternating nearest-multiplier assignment
with a least-squares period update, tries the seed at three metrical levels
(the histogram mode read as a quarter, an eighth, or a half note), keeps the
level with the smallest total squared error, and folds the resulting tempo
into [60, 190] by octave doubling/halving.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .score import BPM_MAX, BPM_MIN, Note, NoteValue, Score, WordEntry, ensure_valid

DURATION_MIN_S = 0.05
DURATION_MAX_S = 3.0
HISTOGRAM_BIN_S = 0.03
MAX_ITERATIONS = 10
CONVERGENCE_S = 0.001
MIN_RETAINED = 4

MULTIPLIERS: tuple[Fraction, ...] = tuple(v.multiplier for v in NoteValue)
_MULTIPLIER_ARRAY = np.array([float(m) for m in MULTIPLIERS])
_CLASSES: tuple[NoteValue, ...] = tuple(NoteValue)


class InsufficientDataError(ValueError):
    """Too few usable durations to estimate a tempo."""


@dataclass(frozen=True)
class TimedNote:
    """A note with absolute timing, prior to symbolic quantization."""

    pitch: int
    onset: float
    duration: float

    @property
    def end(self) -> float:
        return self.onset + self.duration


@dataclass(frozen=True)
class TempoRefinement:
    """Outcome of refining one period hypothesis.

    ``residual_history`` records the total squared error after every
    assignment and every period update, in order; it is non-increasing.
    """

    quarter_period: float
    assignment: tuple[int, ...]
    residual: float
    iterations: int
    residual_history: tuple[float, ...]


@dataclass(frozen=True)
class TempoEstimate:
    """Final tempo estimate over a set of note durations."""

    bpm: int
    quarter_period: float
    multipliers: tuple[Fraction, ...]
    residual: float
    retained_count: int


def _check_positive(durations: Sequence[float]) -> None:
    for d in durations:
        if not d > 0:
            raise ValueError(f"durations must be positive, got {d!r}")


def _retained(durations: Sequence[float]) -> list[float]:
    _check_positive(durations)
    return [d for d in durations if DURATION_MIN_S <= d <= DURATION_MAX_S]


def histogram_mode(durations: Sequence[float], bin_width: float = HISTOGRAM_BIN_S) -> float:
    """Center of the fullest duration histogram bin.

    Bins are half-open intervals [m*w, (m+1)*w) anchored at zero; count ties
    break toward the smaller bin center.  Durations outside the retention
    range are ignored; raises :class:`InsufficientDataError` if nothing
    survives.
    """
    if not bin_width > 0:
        raise ValueError(f"bin width must be positive, got {bin_width!r}")
    retained = _retained(durations)
    if not retained:
        raise InsufficientDataError(
            f"no durations inside [{DURATION_MIN_S}, {DURATION_MAX_S}] s"
        )
    counts: dict[int, int] = {}
    for d in retained:
        counts[math.floor(d / bin_width)] = counts.get(math.floor(d / bin_width), 0) + 1
    best_bin = min(counts, key=lambda m: (-counts[m], m))
    return (best_bin + 0.5) * bin_width


def quantize_duration(duration: float, quarter_period: float) -> tuple[Fraction, NoteValue]:
    """Nearest standard multiplier (and its class) for one duration.

    Minimizes |duration/period - k| over the twelve multipliers; ties break
    toward the smaller multiplier.
    """
    if not duration > 0:
        raise ValueError(f"duration must be positive, got {duration!r}")
    if not quarter_period > 0:
        raise ValueError(f"quarter period must be positive, got {quarter_period!r}")
    ratio = duration / quarter_period
    best = _CLASSES[0]
    best_err = abs(ratio - float(best.multiplier))
    for cls in _CLASSES[1:]:
        err = abs(ratio - float(cls.multiplier))
        if err < best_err:
            best, best_err = cls, err
    return best.multiplier, best


def _assign(durations: np.ndarray, quarter_period: float) -> np.ndarray:
    # argmin takes the first minimum, and multipliers are ascending, so ties
    # fall toward the smaller multiplier, matching quantize_duration.
    return np.argmin(
        np.abs(durations[:, None] / quarter_period - _MULTIPLIER_ARRAY[None, :]), axis=1
    )


def _residual(durations: np.ndarray, assignment: np.ndarray, quarter_period: float) -> float:
    return float(np.sum((durations - _MULTIPLIER_ARRAY[assignment] * quarter_period) ** 2))


def least_squares_period(durations: Sequence[float], multipliers: Sequence[float]) -> float:
    """The period minimizing sum((d_i - k_i*T)^2) for fixed multipliers."""
    d = np.asarray(durations, dtype=float)
    k = np.asarray(multipliers, dtype=float)
    denom = float(np.dot(k, k))
    if not denom > 0:
        raise ValueError("multipliers must not all be zero")
    return float(np.dot(d, k)) / denom


def refine_tempo(durations: Sequence[float], period_init: float) -> TempoRefinement:
    """Alternate assignment and least-squares updates from one seed period.

    Runs at most ``MAX_ITERATIONS`` rounds, stopping early once the period
    moves less than ``CONVERGENCE_S``.  The reported residual uses the final
    assignment and period.
    """
    if not period_init > 0:
        raise ValueError(f"period must be positive, got {period_init!r}")
    d = np.asarray(list(durations), dtype=float)
    if d.size == 0:
        raise InsufficientDataError("cannot refine a tempo with no durations")
    period = float(period_init)
    history: list[float] = []
    assignment = np.zeros(d.size, dtype=int)
    iterations = 0
    for _ in range(MAX_ITERATIONS):
        iterations += 1
        assignment = _assign(d, period)
        history.append(_residual(d, assignment, period))
        new_period = least_squares_period(d, _MULTIPLIER_ARRAY[assignment])
        history.append(_residual(d, assignment, new_period))
        converged = abs(new_period - period) < CONVERGENCE_S
        period = new_period
        if converged:
            break
    return TempoRefinement(
        quarter_period=period,
        assignment=tuple(int(i) for i in assignment),
        residual=_residual(d, assignment, period),
        iterations=iterations,
        residual_history=tuple(history),
    )


def octave_normalize(bpm_raw: float) -> int:
    """Fold a raw tempo into [60, 190] by doubling/halving, then round.

    Rounding is half-away-from-zero so .5 boundaries move up.
    """
    if not bpm_raw > 0:
        raise ValueError(f"bpm must be positive, got {bpm_raw!r}")
    bpm = float(bpm_raw)
    while bpm < BPM_MIN:
        bpm *= 2.0
    while bpm > BPM_MAX:
        bpm /= 2.0
    return int(math.floor(bpm + 0.5))


def estimate_bpm(durations: Sequence[float]) -> TempoEstimate:
    """Estimate a global tempo from raw note durations in seconds.

    Durations outside [0.05, 3.0] s are dropped first; at least four must
    remain.  The histogram mode seeds three period hypotheses (mode, double,
    half, in that order); each is refined independently and the smallest
    final residual wins, earlier hypotheses winning ties.
    """
    retained = _retained(durations)
    if len(retained) < MIN_RETAINED:
        raise InsufficientDataError(
            f"need at least {MIN_RETAINED} durations inside "
            f"[{DURATION_MIN_S}, {DURATION_MAX_S}] s, got {len(retained)}"
        )
    mode = histogram_mode(retained)
    best: TempoRefinement | None = None
    for hypothesis in (mode, 2.0 * mode, mode / 2.0):
        refined = refine_tempo(retained, hypothesis)
        if best is None or refined.residual < best.residual:
            best = refined
    assert best is not None
    return TempoEstimate(
        bpm=octave_normalize(60.0 / best.quarter_period),
        quarter_period=best.quarter_period,
        multipliers=tuple(MULTIPLIERS[i] for i in best.assignment),
        residual=best.residual,
        retained_count=len(retained),
    )


def postprocess_notes(
    notes: Sequence[TimedNote],
    min_duration: float = 0.05,
    merge_gap: float = 0.01,
) -> list[TimedNote]:
    """Drop too-short notes, then merge same-pitch neighbours.

    Input must be sorted by onset and non-overlapping.  Notes shorter than
    ``min_duration`` are removed; consecutive surviving notes with equal
    pitch separated by less than ``merge_gap`` become one note spanning both.
    The result is idempotent under a second pass.
    """
    for i, note in enumerate(notes):
        if not note.duration > 0:
            raise ValueError(f"note {i}: duration must be positive, got {note.duration!r}")
    for i in range(1, len(notes)):
        prev, cur = notes[i - 1], notes[i]
        if cur.onset < prev.onset:
            raise ValueError(f"note {i}: onsets not sorted ({cur.onset} after {prev.onset})")
        if cur.onset < prev.end - 1e-9:
            raise ValueError(f"note {i}: overlaps the previous note")
    kept = [n for n in notes if n.duration >= min_duration]
    merged: list[TimedNote] = []
    for note in kept:
        if merged and merged[-1].pitch == note.pitch and note.onset - merged[-1].end < merge_gap:
            last = merged.pop()
            merged.append(TimedNote(last.pitch, last.onset, note.end - last.onset))
        else:
            merged.append(note)
    return merged


def quantize_transcription(
    words: Sequence[tuple[str, Sequence[TimedNote]]],
    min_duration: float = 0.05,
    merge_gap: float = 0.01,
    default_bpm: int | None = None,
) -> Score:
    """Turn timed word/note groups into a symbolic score.

    Each word's notes are cleaned with :func:`postprocess_notes`; a word left
    empty is a structural error.  All cleaned durations are pooled for tempo
    estimation and every note is quantized against the winning unrounded
    quarter period (not the rounded tempo, which would perturb assignments
    the refinement already settled).  If estimation fails for lack of data
    and ``default_bpm`` is given, that tempo is used instead.
    """
    processed: list[tuple[str, list[TimedNote]]] = []
    for index, (text, timed) in enumerate(words):
        cleaned = postprocess_notes(timed, min_duration=min_duration, merge_gap=merge_gap)
        if not cleaned:
            raise ValueError(f"word {index} ({text!r}) has no notes left after post-processing")
        processed.append((text, cleaned))
    pooled = [note.duration for _, cleaned in processed for note in cleaned]
    try:
        estimate = estimate_bpm(pooled)
        period = estimate.quarter_period
        bpm = estimate.bpm
    except InsufficientDataError:
        if default_bpm is None:
            raise
        if not BPM_MIN <= default_bpm <= BPM_MAX:
            raise ValueError(
                f"default bpm must be in [{BPM_MIN}, {BPM_MAX}], got {default_bpm!r}"
            )
        period = 60.0 / default_bpm
        bpm = default_bpm
    entries = tuple(
        WordEntry(
            text,
            tuple(
                Note(note.pitch, quantize_duration(note.duration, period)[1])
                for note in cleaned
            ),
        )
        for text, cleaned in processed
    )
    return ensure_valid(Score(bpm=bpm, words=entries))
