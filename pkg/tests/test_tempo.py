from __future__ import annotations

import math
import random
from fractions import Fraction

import numpy as np
import pytest

from svtkit import (
    InsufficientDataError,
    Note,
    NoteValue,
    TimedNote,
    estimate_bpm,
    histogram_mode,
    least_squares_period,
    octave_normalize,
    postprocess_notes,
    quantize_duration,
    quantize_transcription,
    refine_tempo,
)

ALL_MULTIPLIERS = [float(v.multiplier) for v in NoteValue]


def brute_force_quantize(duration: float, period: float) -> float:
    # Independent E-step oracle: scan all twelve multipliers, ties to smaller.
    ratio = duration / period
    best = None
    for k in ALL_MULTIPLIERS:
        key = (abs(ratio - k), k)
        if best is None or key < best:
            best = key
    return best[1]


def grid_search_period(durations, lo: float, hi: float, step: float = 1e-4) -> tuple[float, float]:
    # Independent estimator oracle: dense scan of the same objective.
    best_t, best_err = None, math.inf
    t = lo
    while t <= hi:
        err = sum((d - brute_force_quantize(d, t) * t) ** 2 for d in durations)
        if err < best_err:
            best_t, best_err = t, err
        t += step
    return best_t, best_err


def test_histogram_mode_examples():
    assert histogram_mode([0.5] * 20) == pytest.approx(0.495)
    assert histogram_mode([0.10]) == pytest.approx(0.105)
    with pytest.raises(InsufficientDataError):
        histogram_mode([4.0, 4.0, 4.0])


def test_histogram_mode_tie_breaks_toward_smaller_center():
    # 0.1 and 0.5 land in different bins with equal counts.
    assert histogram_mode([0.1, 0.5]) == pytest.approx(0.105)


def test_histogram_mode_rejects_nonpositive():
    with pytest.raises(ValueError):
        histogram_mode([0.5, -0.1])
    with pytest.raises(ValueError):
        histogram_mode([0.0])


def test_quantize_duration_examples():
    assert quantize_duration(0.5, 0.5) == (Fraction(1), NoteValue.N4)
    assert quantize_duration(0.7, 0.5) == (Fraction(3, 2), NoteValue.DOT4)
    assert quantize_duration(0.05, 1.0) == (Fraction(1, 8), NoteValue.N32)


def test_quantize_duration_matches_brute_force():
    rng = random.Random(21)
    for _ in range(2000):
        d = rng.uniform(0.01, 5.0)
        t = rng.uniform(0.05, 2.0)
        k, cls = quantize_duration(d, t)
        assert float(k) == brute_force_quantize(d, t)
        assert cls.multiplier == k


def test_quantize_duration_tie_breaks_toward_smaller():
    # Ratio exactly between 1.0 and 1.5.
    k, cls = quantize_duration(1.25, 1.0)
    assert cls is NoteValue.N4 and k == 1


def test_estimate_bpm_hand_example():
    est = estimate_bpm([0.25] * 4 + [0.5] * 10 + [1.0] * 4)
    assert est.bpm == 120
    assert est.residual == pytest.approx(0.0, abs=1e-12)
    assert est.retained_count == 18
    assert est.quarter_period == pytest.approx(0.5)
    assert set(est.multipliers) == {Fraction(1, 2), Fraction(1), Fraction(2)}


def test_estimate_bpm_uniform_durations_tie_break():
    est = estimate_bpm([0.5] * 20)
    assert est.bpm == 120
    assert est.quarter_period == pytest.approx(0.5)


def test_estimate_bpm_against_grid_oracle():
    t_true = 60.0 / 90.0
    durations = [k * t_true for k in (0.5, 1.0, 1.5, 2.0)]
    est = estimate_bpm(durations)
    assert est.residual < 1e-6
    assert 60 <= est.bpm <= 190
    # Octave-equivalent to the generating 90.
    assert min(abs(est.bpm - 90 * 2**i) for i in range(-2, 3)) <= 1
    _, grid_err = grid_search_period(durations, 0.315, 1.0)
    assert est.residual <= grid_err + 1e-9


def test_estimate_bpm_insufficient_data():
    with pytest.raises(InsufficientDataError):
        estimate_bpm([0.04, 0.04, 0.04])
    with pytest.raises(InsufficientDataError):
        estimate_bpm([0.5, 0.5, 0.5])  # only three retained


def test_octave_normalize_examples():
    assert octave_normalize(240.0) == 120
    assert octave_normalize(50.0) == 100
    assert octave_normalize(95.4) == 95
    assert octave_normalize(60.5) == 61  # half away from zero
    assert octave_normalize(190.0) == 190
    assert octave_normalize(60.0) == 60


def test_octave_normalize_always_in_range():
    rng = random.Random(31)
    for _ in range(500):
        bpm = octave_normalize(10 ** rng.uniform(-3, 4))
        assert 60 <= bpm <= 190
    with pytest.raises(ValueError):
        octave_normalize(0.0)


def test_refine_residual_history_non_increasing():
    rng = random.Random(41)
    for _ in range(200):
        durations = [rng.uniform(0.05, 3.0) for _ in range(rng.randint(4, 30))]
        refined = refine_tempo(durations, rng.uniform(0.1, 2.0))
        history = refined.residual_history
        for a, b in zip(history, history[1:]):
            assert b <= a + 1e-9 * max(1.0, a)
        assert refined.residual == pytest.approx(history[-1])


def test_least_squares_period_beats_dense_grid():
    rng = random.Random(51)
    for _ in range(50):
        n = rng.randint(4, 20)
        durations = [rng.uniform(0.05, 3.0) for _ in range(n)]
        ks = [rng.choice(ALL_MULTIPLIERS) for _ in range(n)]
        t_opt = least_squares_period(durations, ks)
        err_opt = sum((d - k * t_opt) ** 2 for d, k in zip(durations, ks))
        step = 1e-4
        for t in np.arange(max(step, t_opt * 0.5), t_opt * 1.5, step):
            err = sum((d - k * t) ** 2 for d, k in zip(durations, ks))
            assert err_opt <= err + 1e-9


def test_postprocess_merges_same_pitch():
    notes = [TimedNote(60, 0.0, 0.5), TimedNote(60, 0.5, 0.5)]
    assert postprocess_notes(notes) == [TimedNote(60, 0.0, 1.0)]


def test_postprocess_drops_short_notes():
    notes = [TimedNote(60, 0.0, 0.03), TimedNote(62, 0.1, 0.5)]
    assert postprocess_notes(notes) == [TimedNote(62, 0.1, 0.5)]


def test_postprocess_is_idempotent_and_never_grows():
    rng = random.Random(61)
    for _ in range(200):
        notes = []
        t = 0.0
        for _ in range(rng.randint(0, 12)):
            t += rng.uniform(0.0, 0.05)
            dur = rng.uniform(0.01, 0.6)
            notes.append(TimedNote(rng.randint(60, 63), t, dur))
            t += dur
        once = postprocess_notes(notes)
        assert len(once) <= len(notes)
        assert postprocess_notes(once) == once


def test_postprocess_rejects_unsorted_or_overlapping():
    with pytest.raises(ValueError, match="not sorted"):
        postprocess_notes([TimedNote(60, 1.0, 0.5), TimedNote(60, 0.0, 0.5)])
    with pytest.raises(ValueError, match="overlaps"):
        postprocess_notes([TimedNote(60, 0.0, 1.0), TimedNote(60, 0.5, 0.5)])
    with pytest.raises(ValueError, match="positive"):
        postprocess_notes([TimedNote(60, 0.0, 0.0)])


def test_quantize_transcription_composes():
    # One interesting note plus siblings that pin the quarter at 0.5 s.
    words = [
        ("啊", [TimedNote(69, 0.0, 0.5)]),
        ("哦", [TimedNote(70 + (i % 2), i * 0.5 + 0.5, 0.5) for i in range(6)]),
    ]
    score = quantize_transcription(words)
    assert score.bpm == 120
    assert score.words[0].notes == (Note(69, NoteValue.N4),)


def test_quantize_transcription_generative_round_trip():
    rng = random.Random(71)
    for _ in range(30):
        bpm = rng.randint(60, 190)
        period = 60.0 / bpm
        usable = [v for v in NoteValue if 0.05 <= float(v.multiplier) * period <= 3.0]
        words = []
        t = 0.0
        # Quarter notes dominate so the mode hypothesis is the true period.
        classes = [NoteValue.N4] * 8 + [rng.choice(usable) for _ in range(6)]
        for i, cls in enumerate(classes):
            dur = float(cls.multiplier) * period
            words.append((f"w{i}", [TimedNote(60 + (i % 12), t, dur)]))
            t += dur + 0.02
        score = quantize_transcription(words)
        recovered = [w.notes[0].value for w in score.words]
        assert recovered == classes
        assert min(abs(score.bpm - bpm * 2**i) for i in range(-2, 3)) == 0


def test_quantize_transcription_structural_error():
    words = [("a", [TimedNote(60, 0.0, 0.02)])]
    with pytest.raises(ValueError, match="word 0"):
        quantize_transcription(words)


def test_quantize_transcription_default_bpm_fallback():
    words = [("a", [TimedNote(60, 0.0, 0.5)]), ("b", [TimedNote(62, 0.6, 0.25)])]
    with pytest.raises(InsufficientDataError):
        quantize_transcription(words)
    score = quantize_transcription(words, default_bpm=120)
    assert score.bpm == 120
    assert score.words[0].notes[0].value is NoteValue.N4
    assert score.words[1].notes[0].value is NoteValue.N8
