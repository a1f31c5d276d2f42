"""Shared generators for randomized and property-based tests."""

from __future__ import annotations

import random

from hypothesis import strategies as st

from svtkit import Note, NoteValue, Score, WordEntry, word_text_error

WORD_CHARS = "abcdefghijklmnopqrstuvwxyz小星星亮晶晶满天都是月光谢谢你的爱"


def random_word(rng: random.Random, max_len: int = 3) -> str:
    return "".join(rng.choice(WORD_CHARS) for _ in range(rng.randint(1, max_len)))


def random_score(
    rng: random.Random, max_words: int = 8, max_notes: int = 4
) -> Score:
    words = tuple(
        WordEntry(
            random_word(rng),
            tuple(
                Note(rng.randint(0, 127), rng.choice(list(NoteValue)))
                for _ in range(rng.randint(1, max_notes))
            ),
        )
        for _ in range(rng.randint(1, max_words))
    )
    return Score(bpm=rng.randint(60, 190), words=words)


word_texts = st.text(
    alphabet=st.characters(whitelist_categories=("Ll", "Lu", "Lo", "Nd")),
    min_size=1,
    max_size=4,
).filter(lambda t: word_text_error(t) is None)

notes = st.builds(Note, st.integers(0, 127), st.sampled_from(list(NoteValue)))

word_entries = st.builds(
    WordEntry, word_texts, st.lists(notes, min_size=1, max_size=4).map(tuple)
)

scores = st.builds(
    Score, st.integers(60, 190), st.lists(word_entries, min_size=1, max_size=6).map(tuple)
)
