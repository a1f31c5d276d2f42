"""Corpus file formats: JSONL records, token lines, and canonical forms.

Corpora are processed line by line so files larger than memory stream
through.  Two line formats exist:

* score/timed-note records: one JSON object per line, canonically serialized
  with sorted keys, compact separators, raw (non-escaped) unicode, integers
  bare, and reals rounded to at most six significant digits
* token lines: ``<id><TAB><token text>`` with the token text exactly as
  rendered by the vocabulary (or, in JSON form, ``{"id": ..., "tokens": ...}``)

Round-tripping a canonical score corpus through tokens and back reproduces
it byte for byte.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable, Iterator, TextIO

from .score import Note, NoteValue, Score, WordEntry
from .segmenter import EnergyEnvelope
from .tempo import TimedNote

_NOTE_BY_TOKEN = {value.token_name: value for value in NoteValue}


class RecordError(ValueError):
    """A malformed corpus record or line."""


def format_float(x: float) -> str:
    """At most six significant digits, no trailing zeros."""
    return f"{x:.6g}"


def _canon(obj: Any) -> Any:
    if isinstance(obj, float):
        return float(format_float(obj))
    if isinstance(obj, dict):
        return {k: _canon(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canon(v) for v in obj]
    return obj


def canonical_json(obj: Any) -> str:
    """Canonical one-line JSON used for every record the CLI emits."""
    return json.dumps(_canon(obj), sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def parse_json_record(line: str, lineno: int) -> dict:
    """One JSONL record, with line-numbered shape errors."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise RecordError(f"line {lineno}: not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise RecordError(f"line {lineno}: expected a JSON object")
    return obj


def read_json_lines(stream: TextIO) -> Iterator[tuple[int, dict]]:
    """Yield (line number, object) for each non-blank line."""
    for lineno, line in enumerate(stream, start=1):
        line = line.strip()
        if not line:
            continue
        yield lineno, parse_json_record(line, lineno)


def _require(record: dict, key: str, kind: type | tuple[type, ...], where: str) -> Any:
    if key not in record:
        raise RecordError(f"{where}: missing {key!r}")
    value = record[key]
    kinds = kind if isinstance(kind, tuple) else (kind,)
    names = "/".join(k.__name__ for k in kinds)
    if isinstance(value, bool) and bool not in kinds:
        raise RecordError(f"{where}: {key!r} must be {names}")
    if not isinstance(value, kinds):
        raise RecordError(f"{where}: {key!r} must be {names}")
    return value


def record_id(record: dict, where: str = "record") -> str:
    return _require(record, "id", str, where)


def score_to_dict(record_id: str, score: Score) -> dict:
    """Score record: note values are spelled as their token names."""
    return {
        "id": record_id,
        "bpm": score.bpm,
        "words": [
            {
                "text": word.text,
                "notes": [
                    {"midi": note.pitch, "value": note.value.token_name}
                    for note in word.notes
                ],
            }
            for word in score.words
        ],
    }


def score_from_dict(record: dict) -> tuple[str, Score]:
    """Parse a score record; shape errors raise, range problems do not.

    Range and structure invariants are left to score validation so that a
    readable diagnostic (with the record id) can be produced downstream.
    """
    rid = record_id(record)
    where = f"record {rid!r}"
    bpm = _require(record, "bpm", int, where)
    words_raw = _require(record, "words", list, where)
    words = []
    for i, word_raw in enumerate(words_raw):
        if not isinstance(word_raw, dict):
            raise RecordError(f"{where}: words[{i}] must be an object")
        text = _require(word_raw, "text", str, f"{where} words[{i}]")
        notes_raw = _require(word_raw, "notes", list, f"{where} words[{i}]")
        notes = []
        for j, note_raw in enumerate(notes_raw):
            if not isinstance(note_raw, dict):
                raise RecordError(f"{where}: words[{i}].notes[{j}] must be an object")
            midi = _require(note_raw, "midi", int, f"{where} words[{i}].notes[{j}]")
            value_name = _require(note_raw, "value", str, f"{where} words[{i}].notes[{j}]")
            if value_name not in _NOTE_BY_TOKEN:
                raise RecordError(
                    f"{where}: words[{i}].notes[{j}].value {value_name!r} is not a note token"
                )
            notes.append(Note(midi, _NOTE_BY_TOKEN[value_name]))
        words.append(WordEntry(text, tuple(notes)))
    return rid, Score(bpm=bpm, words=tuple(words))


def timed_words_from_dict(record: dict) -> tuple[str, list[tuple[str, list[TimedNote]]]]:
    """Parse a timed-note record: words with {midi, onset, duration} notes."""
    rid = record_id(record)
    where = f"record {rid!r}"
    words_raw = _require(record, "words", list, where)
    words: list[tuple[str, list[TimedNote]]] = []
    for i, word_raw in enumerate(words_raw):
        if not isinstance(word_raw, dict):
            raise RecordError(f"{where}: words[{i}] must be an object")
        text = _require(word_raw, "text", str, f"{where} words[{i}]")
        notes_raw = _require(word_raw, "notes", list, f"{where} words[{i}]")
        notes = []
        for j, note_raw in enumerate(notes_raw):
            if not isinstance(note_raw, dict):
                raise RecordError(f"{where}: words[{i}].notes[{j}] must be an object")
            spot = f"{where} words[{i}].notes[{j}]"
            midi = _require(note_raw, "midi", int, spot)
            onset = _require(note_raw, "onset", (int, float), spot)
            duration = _require(note_raw, "duration", (int, float), spot)
            notes.append(TimedNote(midi, float(onset), float(duration)))
        words.append((text, notes))
    return rid, words


def durations_from_record(record: dict) -> tuple[str, list[float]]:
    """Durations for tempo estimation: a bare list or pooled from words."""
    rid = record_id(record)
    if "durations" in record:
        raw = record["durations"]
        if not isinstance(raw, list) or not all(isinstance(d, (int, float)) for d in raw):
            raise RecordError(f"record {rid!r}: 'durations' must be a list of numbers")
        return rid, [float(d) for d in raw]
    _, words = timed_words_from_dict(record)
    return rid, [note.duration for _, notes in words for note in notes]


def token_line(record_id: str, token_text: str) -> str:
    return f"{record_id}\t{token_text}"


def parse_token_line(line: str, lineno: int) -> tuple[str, str]:
    """Split a token line into (id, token text); accepts the JSON form too."""
    stripped = line.strip()
    if stripped.startswith("{"):
        try:
            obj = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise RecordError(f"line {lineno}: not valid JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise RecordError(f"line {lineno}: expected a JSON object")
        rid = record_id(obj, f"line {lineno}")
        tokens = _require(obj, "tokens", str, f"line {lineno}")
        return rid, tokens
    if "\t" not in stripped:
        raise RecordError(f"line {lineno}: token line needs '<id><TAB><tokens>'")
    rid, text = stripped.split("\t", 1)
    if not rid:
        raise RecordError(f"line {lineno}: empty record id")
    return rid, text


def load_envelope(path: Path, frame_rate: float | None) -> EnergyEnvelope:
    """Read an envelope file: JSON with frame_rate/energies, or one value
    per line (frame rate supplied by the caller)."""
    if path.suffix.lower() == ".json":
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
        if not isinstance(obj, dict) or "frame_rate" not in obj or "energies" not in obj:
            raise RecordError(f"{path}: envelope JSON needs 'frame_rate' and 'energies'")
        return EnergyEnvelope(float(obj["frame_rate"]), tuple(float(e) for e in obj["energies"]))
    if frame_rate is None:
        raise RecordError(f"{path}: plain-text envelopes need an explicit frame rate")
    energies = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                energies.append(float(line))
            except ValueError as exc:
                raise RecordError(f"{path} line {lineno}: not a number: {line!r}") from exc
    return EnergyEnvelope(frame_rate, tuple(energies))


def envelope_from_record(
    record: dict, base_dir: Path, frame_rate: float | None
) -> EnergyEnvelope:
    """Envelope referenced by a record, inline or via ``envelope_path``."""
    rid = record_id(record)
    if "envelope" in record:
        obj = record["envelope"]
        if not isinstance(obj, dict) or "frame_rate" not in obj or "energies" not in obj:
            raise RecordError(f"record {rid!r}: inline envelope needs 'frame_rate' and 'energies'")
        return EnergyEnvelope(float(obj["frame_rate"]), tuple(float(e) for e in obj["energies"]))
    path_raw = _require(record, "envelope_path", str, f"record {rid!r}")
    path = Path(path_raw)
    if not path.is_absolute():
        path = base_dir / path
    return load_envelope(path, frame_rate)


def write_lines(stream: TextIO, lines: Iterable[str]) -> None:
    for line in lines:
        stream.write(line)
        stream.write("\n")
