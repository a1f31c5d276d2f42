"""Transcription quality metrics: lyric word error rate and melody errors.

Lyric accuracy is the standard word error rate under a minimum edit-distance
alignment.  Melody accuracy compares pitch, symbolic note value, and nominal
duration over paired notes: words are paired by the edit alignment (matches
and substitutions both pair), and within a paired word the notes are paired
positionally up to the shorter side.  Note-count error is reported
separately, so a melisma split costs nothing beyond the count.

Per paired note:

* pitch error: |MIDI difference|
* note-value error: |log2 of the value ratio| (quarter-note units)
* duration error: |log2 of the nominal-duration ratio| with each side's own
  tempo, i.e. nominal duration = (60/bpm) * value
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

from .score import Score, total_note_count


@dataclass(frozen=True)
class Match:
    ref_index: int
    hyp_index: int


@dataclass(frozen=True)
class Substitute:
    ref_index: int
    hyp_index: int


@dataclass(frozen=True)
class Delete:
    ref_index: int


@dataclass(frozen=True)
class Insert:
    hyp_index: int


AlignOp = Union[Match, Substitute, Delete, Insert]


def _distance_table(ref: Sequence[str], hyp: Sequence[str]) -> list[list[int]]:
    n, m = len(ref), len(hyp)
    dp = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        dp[i][0] = i
    for j in range(m + 1):
        dp[0][j] = j
    for i in range(1, n + 1):
        row = dp[i]
        prev = dp[i - 1]
        r = ref[i - 1]
        for j in range(1, m + 1):
            if r == hyp[j - 1]:
                row[j] = prev[j - 1]
            else:
                row[j] = 1 + min(prev[j - 1], prev[j], row[j - 1])
    return dp


def _char_units(words: Sequence[str]) -> list[str]:
    return [ch for word in words for ch in word]


def wer(ref: Sequence[str], hyp: Sequence[str], char_level: bool = False) -> float:
    """(substitutions + deletions + insertions) / reference length.

    ``char_level`` scores on the flattened character sequences instead of
    whole words, which suits scripts where a "word" is itself a character
    group.  The reference must be non-empty.
    """
    if char_level:
        ref, hyp = _char_units(ref), _char_units(hyp)
    if not ref:
        raise ValueError("reference word sequence must be non-empty")
    return _distance_table(ref, hyp)[len(ref)][len(hyp)] / len(ref)


def align_words(ref: Sequence[str], hyp: Sequence[str]) -> list[AlignOp]:
    """One minimum-cost alignment between two word sequences.

    The backtrace is deterministic: at equal cost it prefers a match, then a
    substitution, then a deletion, then an insertion.  The op list covers
    every index on both sides exactly once, in increasing order.
    """
    dp = _distance_table(ref, hyp)
    ops: list[AlignOp] = []
    i, j = len(ref), len(hyp)
    while i > 0 or j > 0:
        if i > 0 and j > 0 and ref[i - 1] == hyp[j - 1] and dp[i][j] == dp[i - 1][j - 1]:
            ops.append(Match(i - 1, j - 1))
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and dp[i][j] == dp[i - 1][j - 1] + 1:
            ops.append(Substitute(i - 1, j - 1))
            i, j = i - 1, j - 1
        elif i > 0 and dp[i][j] == dp[i - 1][j] + 1:
            ops.append(Delete(i - 1))
            i -= 1
        else:
            ops.append(Insert(j - 1))
            j -= 1
    ops.reverse()
    return ops


@dataclass(frozen=True)
class EvalReport:
    """Per-excerpt metrics.  MAE fields are None when no notes paired."""

    wer: float
    mae_pitch: float | None
    mae_note: float | None
    mae_dur: float | None
    num_note: int
    paired_note_count: int
    ref_word_count: int


@dataclass(frozen=True)
class CorpusReport:
    """Unweighted means of per-excerpt metrics.

    Excerpts with undefined MAEs are excluded from the MAE means and counted
    in ``undefined_mae_excerpts``; a mean is None if no excerpt defined it.
    """

    excerpt_count: int
    wer: float
    mae_pitch: float | None
    mae_note: float | None
    mae_dur: float | None
    num_note: float
    undefined_mae_excerpts: int


def _mean(values: list[float]) -> float | None:
    return sum(values) / len(values) if values else None


def evaluate(pred: Score, gt: Score, char_wer: bool = False) -> EvalReport:
    """Score a predicted transcription against a reference one."""
    gt_texts = [w.text for w in gt.words]
    pred_texts = [w.text for w in pred.words]
    pitch_errs: list[float] = []
    note_errs: list[float] = []
    dur_errs: list[float] = []
    for op in align_words(gt_texts, pred_texts):
        if not isinstance(op, (Match, Substitute)):
            continue
        gt_word = gt.words[op.ref_index]
        pred_word = pred.words[op.hyp_index]
        for gt_note, pred_note in zip(gt_word.notes, pred_word.notes):
            pitch_errs.append(abs(pred_note.pitch - gt_note.pitch))
            value_ratio = pred_note.value.multiplier / gt_note.value.multiplier
            note_errs.append(abs(math.log2(float(value_ratio))))
            # Nominal-duration ratio folds in the tempo ratio exactly.
            dur_ratio = value_ratio * Fraction(gt.bpm, pred.bpm)
            dur_errs.append(abs(math.log2(float(dur_ratio))))
    return EvalReport(
        wer=wer(gt_texts, pred_texts, char_level=char_wer),
        mae_pitch=_mean(pitch_errs),
        mae_note=_mean(note_errs),
        mae_dur=_mean(dur_errs),
        num_note=abs(total_note_count(pred) - total_note_count(gt)),
        paired_note_count=len(pitch_errs),
        ref_word_count=len(gt_texts),
    )


def aggregate_reports(reports: Sequence[EvalReport]) -> CorpusReport:
    """Unweighted mean of each defined metric over per-excerpt reports."""
    if not reports:
        raise ValueError("corpus must contain at least one report")
    defined = [r for r in reports if r.mae_pitch is not None]
    return CorpusReport(
        excerpt_count=len(reports),
        wer=sum(r.wer for r in reports) / len(reports),
        mae_pitch=_mean([r.mae_pitch for r in defined]),
        mae_note=_mean([r.mae_note for r in defined]),
        mae_dur=_mean([r.mae_dur for r in defined]),
        num_note=sum(r.num_note for r in reports) / len(reports),
        undefined_mae_excerpts=len(reports) - len(defined),
    )


def evaluate_corpus(
    pairs: Sequence[tuple[Score, Score]], char_wer: bool = False
) -> tuple[CorpusReport, list[EvalReport]]:
    """Evaluate (pred, gt) pairs and aggregate with unweighted means."""
    if not pairs:
        raise ValueError("corpus must contain at least one (pred, gt) pair")
    reports = [evaluate(pred, gt, char_wer=char_wer) for pred, gt in pairs]
    return aggregate_reports(reports), reports
