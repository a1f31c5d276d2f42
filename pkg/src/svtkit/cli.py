"""Command-line front end for corpus-scale processing.

Commands: ``tokenize``, ``parse``, ``estimate-bpm``, ``quantize``,
``evaluate``, ``snap``, ``validate``.  All of them stream records line by
line, keep output in input order, write diagnostics naming the record id to
stderr, and exit non-zero exactly when at least one record failed.  Given
identical inputs and flags the output bytes are identical regardless of
``--jobs``.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import ExitStack
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence, TextIO

from . import corpus, figures
from .codec import (
    ParseError,
    parse_cot,
    parse_interleaved,
    serialize_cot,
    serialize_interleaved,
    serialize_lyrics,
)
from .metrics import EvalReport, aggregate_reports, evaluate
from .score import Score, validate_score
from .segmenter import snap_boundary
from .tempo import estimate_bpm, quantize_transcription
from .tokens import LexError, SepTok, lex, render_sequence


@dataclass
class RecordResult:
    ok: bool
    lines: list[str] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    payload: Any = None


def _map_records(
    items: Sequence[Any], fn: Callable[[Any], RecordResult], jobs: int
) -> list[RecordResult]:
    """Apply a pure per-record function, preserving input order."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _emit(results: Iterable[RecordResult], out: TextIO, err: TextIO) -> int:
    failed = 0
    for result in results:
        corpus.write_lines(out, result.lines)
        for note in result.notes:
            err.write(f"note: {note}\n")
        for diag in result.diagnostics:
            err.write(f"error: {diag}\n")
        if not result.ok:
            failed += 1
    return 0 if failed == 0 else 1


def _read_lines(stream: TextIO) -> list[str]:
    return [line.rstrip("\n") for line in stream if line.strip()]


def _fmt_opt(value: float | None) -> str:
    return "NA" if value is None else corpus.format_float(value)


# --- tokenize ---------------------------------------------------------------

_SERIALIZERS = {
    "cot": serialize_cot,
    "interleaved": serialize_interleaved,
    "lyrics": serialize_lyrics,
}


def _tokenize_record(line: str, lineno: int, mode: str, out_format: str) -> RecordResult:
    try:
        obj = corpus.parse_json_record(line, lineno)
        rid, score = corpus.score_from_dict(obj)
    except corpus.RecordError as exc:
        return RecordResult(ok=False, diagnostics=[f"line {lineno}: {exc}"])
    violations = validate_score(score)
    if violations:
        return RecordResult(
            ok=False, diagnostics=[f"record {rid!r}: {v}" for v in violations]
        )
    text = render_sequence(_SERIALIZERS[mode](score))
    if out_format == "json":
        return RecordResult(ok=True, lines=[corpus.canonical_json({"id": rid, "tokens": text})])
    return RecordResult(ok=True, lines=[corpus.token_line(rid, text)])


def _cmd_tokenize(args: argparse.Namespace, out: TextIO, err: TextIO) -> int:
    with _open_input(args.input) as stream:
        lines = _read_lines(stream)
    items = list(enumerate(lines, start=1))
    results = _map_records(
        items,
        lambda item: _tokenize_record(item[1], item[0], args.mode, args.format),
        args.jobs,
    )
    return _emit(results, out, err)


# --- parse ------------------------------------------------------------------


def _parse_record(line: str, lineno: int, strict: bool) -> RecordResult:
    try:
        rid, text = corpus.parse_token_line(line, lineno)
    except corpus.RecordError as exc:
        return RecordResult(ok=False, diagnostics=[str(exc)])
    try:
        tokens = lex(text)
        if any(isinstance(t, SepTok) for t in tokens):
            _, score, report = parse_cot(tokens)
        else:
            score = parse_interleaved(tokens)
            report = None
    except (LexError, ParseError) as exc:
        return RecordResult(ok=False, diagnostics=[f"record {rid!r}: {exc}"])
    result = RecordResult(ok=True, lines=[corpus.canonical_json(corpus.score_to_dict(rid, score))])
    if report is not None:
        result.payload = (rid, report)
        if not report.consistent:
            if strict:
                return RecordResult(
                    ok=False,
                    diagnostics=[f"record {rid!r}: lyric prefix inconsistent: {report.summary()}"],
                )
            result.notes.append(f"record {rid!r}: lyric prefix inconsistent: {report.summary()}")
    return result


def _cmd_parse(args: argparse.Namespace, out: TextIO, err: TextIO) -> int:
    with _open_input(args.input) as stream:
        lines = _read_lines(stream)
    items = list(enumerate(lines, start=1))
    results = _map_records(
        items,
        lambda item: _parse_record(item[1], item[0], args.strict_consistency),
        args.jobs,
    )
    code = _emit(results, out, err)
    if args.consistency_report:
        with open(args.consistency_report, "w", encoding="utf-8") as fh:
            for result in results:
                if result.payload is None:
                    continue
                rid, report = result.payload
                fh.write(
                    f"id={rid}\tlength_delta={report.length_delta:+d}"
                    f"\tmismatches={len(report.mismatches)}\t{report.summary()}\n"
                )
    return code


# --- estimate-bpm -----------------------------------------------------------


def _estimate_record(line: str, lineno: int) -> RecordResult:
    try:
        obj = corpus.parse_json_record(line, lineno)
        rid, durations = corpus.durations_from_record(obj)
    except corpus.RecordError as exc:
        return RecordResult(ok=False, diagnostics=[f"line {lineno}: {exc}"])
    try:
        estimate = estimate_bpm(durations)
    except ValueError as exc:
        return RecordResult(ok=False, diagnostics=[f"record {rid!r}: {exc}"])
    line_out = (
        f"id={rid}\tbpm={estimate.bpm}"
        f"\tquarter_period={corpus.format_float(estimate.quarter_period)}"
        f"\tresidual={corpus.format_float(estimate.residual)}"
        f"\tretained={estimate.retained_count}"
    )
    return RecordResult(ok=True, lines=[line_out], payload=(rid, durations, estimate))


def _cmd_estimate_bpm(args: argparse.Namespace, out: TextIO, err: TextIO) -> int:
    with _open_input(args.input) as stream:
        lines = _read_lines(stream)
    items = list(enumerate(lines, start=1))
    results = _map_records(items, lambda item: _estimate_record(item[1], item[0]), args.jobs)
    code = _emit(results, out, err)
    if args.figures:
        out_dir = Path(args.figures)
        for result in results:
            if result.ok and result.payload is not None:
                rid, durations, estimate = result.payload
                figures.save_duration_fit(rid, durations, estimate, out_dir)
    return code


# --- quantize ---------------------------------------------------------------


def _quantize_record(
    line: str, lineno: int, min_dur: float, merge_gap: float, default_bpm: int | None
) -> RecordResult:
    try:
        obj = corpus.parse_json_record(line, lineno)
        rid, words = corpus.timed_words_from_dict(obj)
    except corpus.RecordError as exc:
        return RecordResult(ok=False, diagnostics=[f"line {lineno}: {exc}"])
    try:
        score = quantize_transcription(
            words, min_duration=min_dur, merge_gap=merge_gap, default_bpm=default_bpm
        )
    except ValueError as exc:
        return RecordResult(ok=False, diagnostics=[f"record {rid!r}: {exc}"])
    return RecordResult(ok=True, lines=[corpus.canonical_json(corpus.score_to_dict(rid, score))])


def _cmd_quantize(args: argparse.Namespace, out: TextIO, err: TextIO) -> int:
    with _open_input(args.input) as stream:
        lines = _read_lines(stream)
    items = list(enumerate(lines, start=1))
    results = _map_records(
        items,
        lambda item: _quantize_record(
            item[1], item[0], args.min_note_dur, args.merge_gap, args.default_bpm
        ),
        args.jobs,
    )
    return _emit(results, out, err)


# --- evaluate ---------------------------------------------------------------


def _load_score_corpus(path: str, err: TextIO) -> dict[str, Score] | None:
    scores: dict[str, Score] = {}
    ok = True
    with _open_input(path) as stream:
        try:
            for lineno, obj in corpus.read_json_lines(stream):
                try:
                    rid, score = corpus.score_from_dict(obj)
                except corpus.RecordError as exc:
                    err.write(f"error: line {lineno}: {exc}\n")
                    ok = False
                    continue
                if rid in scores:
                    err.write(f"error: record {rid!r}: duplicate id\n")
                    ok = False
                    continue
                violations = validate_score(score)
                if violations:
                    for violation in violations:
                        err.write(f"error: record {rid!r}: {violation}\n")
                    ok = False
                    continue
                scores[rid] = score
        except corpus.RecordError as exc:
            err.write(f"error: {exc}\n")
            return None
    return scores if ok else None


_EXCERPT_COLUMNS = ("wer", "mae_pitch", "mae_note", "mae_dur", "num_note")


def _excerpt_line(rid: str, report: EvalReport) -> str:
    return (
        f"excerpt\tid={rid}"
        f"\twer={corpus.format_float(report.wer)}"
        f"\tmae_pitch={_fmt_opt(report.mae_pitch)}"
        f"\tmae_note={_fmt_opt(report.mae_note)}"
        f"\tmae_dur={_fmt_opt(report.mae_dur)}"
        f"\tnum_note={report.num_note}"
        f"\tpaired_notes={report.paired_note_count}"
        f"\tref_words={report.ref_word_count}"
    )


def _aligned_table(ids: list[str], reports: list[EvalReport], corpus_row: list[str]) -> list[str]:
    header = ["id", *_EXCERPT_COLUMNS]
    rows = [header]
    for rid, report in zip(ids, reports):
        rows.append(
            [
                rid,
                corpus.format_float(report.wer),
                _fmt_opt(report.mae_pitch),
                _fmt_opt(report.mae_note),
                _fmt_opt(report.mae_dur),
                str(report.num_note),
            ]
        )
    rows.append(corpus_row)
    widths = [max(len(row[c]) for row in rows) for c in range(len(header))]
    return ["  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip() for row in rows]


def _cmd_evaluate(args: argparse.Namespace, out: TextIO, err: TextIO) -> int:
    gt = _load_score_corpus(args.gt, err)
    pred = _load_score_corpus(args.pred, err)
    if gt is None or pred is None:
        return 1
    if not gt:
        err.write("error: ground-truth corpus is empty\n")
        return 1
    missing = [rid for rid in gt if rid not in pred]
    if missing:
        err.write(f"error: ids missing from predictions: {', '.join(sorted(missing))}\n")
        return 1
    ids = list(gt)
    pairs = [(pred[rid], gt[rid]) for rid in ids]
    per_excerpt = _map_records(
        pairs,
        lambda pair: RecordResult(ok=True, payload=evaluate(pair[0], pair[1], char_wer=args.char_wer)),
        args.jobs,
    )
    reports = [r.payload for r in per_excerpt]
    corpus_report = aggregate_reports(reports)
    for rid, report in zip(ids, reports):
        out.write(_excerpt_line(rid, report) + "\n")
    corpus_line = (
        f"corpus\texcerpts={corpus_report.excerpt_count}"
        f"\twer={corpus.format_float(corpus_report.wer)}"
        f"\tmae_pitch={_fmt_opt(corpus_report.mae_pitch)}"
        f"\tmae_note={_fmt_opt(corpus_report.mae_note)}"
        f"\tmae_dur={_fmt_opt(corpus_report.mae_dur)}"
        f"\tnum_note={corpus.format_float(corpus_report.num_note)}"
        f"\tundefined_mae={corpus_report.undefined_mae_excerpts}"
    )
    out.write(corpus_line + "\n\n")
    corpus_row = [
        "CORPUS",
        corpus.format_float(corpus_report.wer),
        _fmt_opt(corpus_report.mae_pitch),
        _fmt_opt(corpus_report.mae_note),
        _fmt_opt(corpus_report.mae_dur),
        corpus.format_float(corpus_report.num_note),
    ]
    for line in _aligned_table(ids, reports, corpus_row):
        out.write(line + "\n")
    if args.figures:
        out_dir = Path(args.figures)
        figures.save_metric_distributions(reports, out_dir)
        figures.save_corpus_summary(corpus_report, out_dir)
    return 0


# --- snap -------------------------------------------------------------------


def _snap_record(
    line: str, lineno: int, base_dir: Path, args: argparse.Namespace
) -> RecordResult:
    try:
        obj = corpus.parse_json_record(line, lineno)
        rid = corpus.record_id(obj)
        raw = obj.get("timestamps")
        if not isinstance(raw, list) or not all(isinstance(t, (int, float)) for t in raw):
            raise corpus.RecordError(f"record {rid!r}: 'timestamps' must be a list of numbers")
        env = corpus.envelope_from_record(obj, base_dir, args.frame_rate)
    except corpus.RecordError as exc:
        return RecordResult(ok=False, diagnostics=[f"line {lineno}: {exc}"])
    try:
        snapped = [
            snap_boundary(
                env,
                float(t),
                window_s=args.window,
                rel_threshold_db=args.threshold_db,
                min_silence_s=args.min_silence,
            )
            for t in raw
        ]
    except ValueError as exc:
        return RecordResult(ok=False, diagnostics=[f"record {rid!r}: {exc}"])
    result = RecordResult(
        ok=True, lines=[corpus.canonical_json({"id": rid, "timestamps": snapped})]
    )
    increasing_in = all(a < b for a, b in zip(raw, raw[1:]))
    increasing_out = all(a < b for a, b in zip(snapped, snapped[1:]))
    if increasing_in and not increasing_out:
        result.notes.append(f"record {rid!r}: snapped timestamps are no longer increasing")
    return result


def _cmd_snap(args: argparse.Namespace, out: TextIO, err: TextIO) -> int:
    base_dir = Path(args.input).parent if args.input != "-" else Path.cwd()
    with _open_input(args.input) as stream:
        lines = _read_lines(stream)
    items = list(enumerate(lines, start=1))
    results = _map_records(
        items, lambda item: _snap_record(item[1], item[0], base_dir, args), args.jobs
    )
    return _emit(results, out, err)


# --- validate ---------------------------------------------------------------


def _validate_record(line: str, lineno: int) -> RecordResult:
    try:
        obj = corpus.parse_json_record(line, lineno)
        rid, score = corpus.score_from_dict(obj)
    except corpus.RecordError as exc:
        return RecordResult(ok=False, diagnostics=[f"line {lineno}: {exc}"])
    violations = validate_score(score)
    if violations:
        return RecordResult(
            ok=False,
            lines=[f"id={rid}\tstatus=invalid\tviolations={len(violations)}"],
            diagnostics=[f"record {rid!r}: {v}" for v in violations],
        )
    return RecordResult(ok=True, lines=[f"id={rid}\tstatus=ok"])


def _cmd_validate(args: argparse.Namespace, out: TextIO, err: TextIO) -> int:
    with _open_input(args.input) as stream:
        lines = _read_lines(stream)
    items = list(enumerate(lines, start=1))
    results = _map_records(items, lambda item: _validate_record(item[1], item[0]), args.jobs)
    return _emit(results, out, err)


# --- wiring -----------------------------------------------------------------


class _StdinWrapper:
    def __init__(self, stream: TextIO):
        self._stream = stream

    def __enter__(self) -> TextIO:
        return self._stream

    def __exit__(self, *exc: object) -> None:
        pass


def _open_input(path: str):
    if path == "-":
        return _StdinWrapper(sys.stdin)
    return open(path, encoding="utf-8")


def _add_common(parser: argparse.ArgumentParser, with_input: bool = True) -> None:
    if with_input:
        parser.add_argument("--input", "-i", default="-", help="input file, or - for stdin")
    parser.add_argument("--output", "-o", default="-", help="output file, or - for stdout")
    parser.add_argument("--jobs", type=int, default=1, help="parallel workers (output order is unchanged)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="svtkit",
        description="Singing-transcription toolkit: score/token codec, tempo estimation, metrics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tokenize", help="score JSONL -> token lines")
    _add_common(p)
    p.add_argument("--mode", choices=("cot", "interleaved", "lyrics"), default="cot")
    p.add_argument("--format", choices=("tokens", "json"), default="tokens",
                   help="output line format")
    p.set_defaults(handler=_cmd_tokenize)

    p = sub.add_parser("parse", help="token lines -> score JSONL")
    _add_common(p)
    p.add_argument("--strict-consistency", action="store_true",
                   help="fail records whose lyric prefix disagrees with the body")
    p.add_argument("--consistency-report", metavar="FILE",
                   help="write per-record prefix/body comparison lines here")
    p.set_defaults(handler=_cmd_parse)

    p = sub.add_parser("estimate-bpm", help="timed-note JSONL -> tempo report")
    _add_common(p)
    p.add_argument("--figures", metavar="DIR", help="also render per-record duration fits")
    p.set_defaults(handler=_cmd_estimate_bpm)

    p = sub.add_parser("quantize", help="timed-note JSONL -> score JSONL")
    _add_common(p)
    p.add_argument("--min-note-dur", type=float, default=0.05, metavar="S",
                   help="drop notes shorter than this many seconds")
    p.add_argument("--merge-gap", type=float, default=0.01, metavar="S",
                   help="merge same-pitch notes separated by less than this")
    p.add_argument("--default-bpm", type=int, default=None,
                   help="fallback tempo when too few durations remain to estimate one")
    p.set_defaults(handler=_cmd_quantize)

    p = sub.add_parser("evaluate", help="score predictions against references")
    p.add_argument("--pred", required=True, help="predicted score JSONL")
    p.add_argument("--gt", required=True, help="reference score JSONL")
    _add_common(p, with_input=False)
    p.add_argument("--char-wer", action="store_true", help="character-level word error rate")
    p.add_argument("--figures", metavar="DIR", help="also render metric distribution figures")
    p.set_defaults(handler=_cmd_evaluate)

    p = sub.add_parser("snap", help="snap rough timestamps to silence centers")
    _add_common(p)
    p.add_argument("--frame-rate", type=float, default=None, metavar="HZ",
                   help="frame rate for plain-text envelope files")
    p.add_argument("--threshold-db", type=float, default=-40.0)
    p.add_argument("--min-silence", type=float, default=0.1, metavar="S")
    p.add_argument("--window", type=float, default=1.5, metavar="S")
    p.set_defaults(handler=_cmd_snap)

    p = sub.add_parser("validate", help="check score JSONL invariants")
    _add_common(p)
    p.set_defaults(handler=_cmd_validate)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    with ExitStack() as stack:
        if args.output == "-":
            out = sys.stdout
        else:
            out = stack.enter_context(open(args.output, "w", encoding="utf-8"))
        return args.handler(args, out, sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
