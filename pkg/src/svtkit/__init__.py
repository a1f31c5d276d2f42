"""Symbolic toolkit for singing-voice transcription.

A lossless codec between structured scores and interleaved/staged token
sequences, a grammar-mask engine for constrained decoding, tempo estimation
with symbolic quantization, silence-based boundary snapping, and the
transcription evaluation metric suite.
"""

from .codec import (
    ConsistencyReport,
    ParseError,
    check_consistency,
    parse_cot,
    parse_interleaved,
    serialize_cot,
    serialize_interleaved,
    serialize_lyrics,
)
from .grammar import (
    DecodeMode,
    GrammarError,
    GrammarState,
    Phase,
    ReplayProvider,
    TokenMask,
    accepts,
    decode,
    feed,
    grammar_allowed,
    grammar_init,
    grammar_step,
)
from .metrics import (
    CorpusReport,
    Delete,
    EvalReport,
    Insert,
    Match,
    Substitute,
    aggregate_reports,
    align_words,
    evaluate,
    evaluate_corpus,
    wer,
)
from .score import (
    BPM_MAX,
    BPM_MIN,
    MIDI_MAX,
    MIDI_MIN,
    Note,
    NoteValue,
    Score,
    ValidationError,
    WordEntry,
    ensure_valid,
    multiplier,
    nominal_duration,
    total_note_count,
    validate_score,
    word_text_error,
)
from .segmenter import EnergyEnvelope, SilenceRegion, detect_silence, snap_boundary
from .tempo import (
    InsufficientDataError,
    TempoEstimate,
    TempoRefinement,
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
from .tokens import (
    BpmTok,
    LexError,
    NoteTok,
    PitchTok,
    SepTok,
    Token,
    WordTok,
    lex,
    render_sequence,
    render_token,
)

__version__ = "0.1.0"
