from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from svtkit import (
    Note,
    NoteValue,
    Score,
    ValidationError,
    WordEntry,
    ensure_valid,
    multiplier,
    nominal_duration,
    serialize_interleaved,
    total_note_count,
    validate_score,
)

from conftest import random_score

# Duration-class table, value for value.
EXPECTED_MULTIPLIERS = {
    NoteValue.N32: Fraction(1, 8),
    NoteValue.DOT32: Fraction(3, 16),
    NoteValue.N16: Fraction(1, 4),
    NoteValue.DOT16: Fraction(3, 8),
    NoteValue.N8: Fraction(1, 2),
    NoteValue.DOT8: Fraction(3, 4),
    NoteValue.N4: Fraction(1),
    NoteValue.DOT4: Fraction(3, 2),
    NoteValue.N2: Fraction(2),
    NoteValue.DOT2: Fraction(3),
    NoteValue.N1: Fraction(4),
    NoteValue.DOT1: Fraction(6),
}


def test_exactly_twelve_classes_with_expected_multipliers():
    assert len(NoteValue) == 12
    for value, expected in EXPECTED_MULTIPLIERS.items():
        assert multiplier(value) == expected
        assert value.multiplier == expected


def test_dotted_classes_are_one_and_a_half_times_base():
    for value in NoteValue:
        if value.dotted:
            assert value.multiplier == value.undotted.multiplier * Fraction(3, 2)
        else:
            assert value.undotted is value


def test_multiplier_is_injective():
    seen = {v.multiplier for v in NoteValue}
    assert len(seen) == 12


@pytest.mark.parametrize(
    "value,bpm,expected",
    [
        (NoteValue.N4, 120, 0.5),
        (NoteValue.DOT2, 60, 3.0),
        (NoteValue.N16, 100, 0.15),
    ],
)
def test_nominal_duration_examples(value, bpm, expected):
    assert nominal_duration(value, bpm) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("bpm", [59, 191, 0, -10])
def test_nominal_duration_rejects_bpm_out_of_range(bpm):
    with pytest.raises(ValueError):
        nominal_duration(NoteValue.N4, bpm)


@given(st.sampled_from(list(NoteValue)), st.integers(60, 190))
def test_nominal_duration_inverts_to_multiplier(value, bpm):
    assert nominal_duration(value, bpm) * bpm / 60.0 == pytest.approx(
        float(value.multiplier), rel=1e-15
    )


def make_valid_score() -> Score:
    return Score(
        120,
        (
            WordEntry("小", (Note(60, NoteValue.N4),)),
            WordEntry("星", (Note(62, NoteValue.N8), Note(64, NoteValue.N8))),
        ),
    )


def test_validate_accepts_well_formed_score():
    assert validate_score(make_valid_score()) == []


def test_validate_reports_empty_note_list_with_path():
    score = Score(120, (WordEntry("a", (Note(60, NoteValue.N4),)), WordEntry("b", ())))
    violations = validate_score(score)
    assert len(violations) == 1
    assert "words[1].notes" in violations[0]


def test_validate_reports_bpm_out_of_range():
    score = Score(45, (WordEntry("a", (Note(60, NoteValue.N4),)),))
    violations = validate_score(score)
    assert violations and "bpm" in violations[0] and "[60, 190]" in violations[0]


def test_validate_reports_every_violation():
    score = Score(300, (WordEntry("a b", (Note(200, NoteValue.N4),)), WordEntry("c", ())))
    violations = validate_score(score)
    assert len(violations) == 4  # bpm, word text, pitch, empty notes


def test_validate_reports_empty_word_list():
    violations = validate_score(Score(120, ()))
    assert violations == ["words: empty (a score needs at least one word)"]


def test_ensure_valid_raises_with_violations():
    with pytest.raises(ValidationError) as info:
        ensure_valid(Score(45, ()))
    assert len(info.value.violations) == 2


def test_total_note_count_examples():
    score = Score(
        100,
        (
            WordEntry("a", (Note(60, NoteValue.N4),)),
            WordEntry("b", (Note(61, NoteValue.N8), Note(62, NoteValue.N8))),
            WordEntry("c", (Note(63, NoteValue.N2),)),
        ),
    )
    assert total_note_count(score) == 4
    assert total_note_count(Score(60, (WordEntry("x", (Note(0, NoteValue.N32),)),))) == 1


def test_total_note_count_matches_independent_fold():
    rng = random.Random(7)
    for _ in range(25):
        score = random_score(rng, max_words=10, max_notes=4)
        flattened = [note for word in score.words for note in word.notes]
        assert total_note_count(score) == len(flattened)


def test_validation_agrees_with_interleaved_serialization():
    rng = random.Random(11)
    candidates = [random_score(rng) for _ in range(20)]
    candidates.append(Score(30, (WordEntry("a", (Note(60, NoteValue.N4),)),)))
    candidates.append(Score(120, (WordEntry("a", ()),)))
    candidates.append(Score(120, ()))
    candidates.append(Score(120, (WordEntry("<BPM_60>", (Note(60, NoteValue.N4),)),)))
    for score in candidates:
        ok = validate_score(score) == []
        try:
            serialize_interleaved(score)
            serialized = True
        except (ValidationError, ValueError):
            serialized = False
        assert ok == serialized
