"""Batch evaluation of medication information extraction from clinical notes."""

from medeval.corpus_io import (
    CharSpan, Context, Document, GoldEntity, LineTokenRef, MedField, SourceFormat,
    line_token_to_char_span, load_documents, parse_brat_annotations,
    parse_i2b2_annotations, parse_offset_pair_annotations,
)
from medeval.matcher import (
    ConfusionCounts, MatchMode, MatchTrace, is_exact_match, is_lenient_match, match_document,
)
from medeval.metrics import (
    EvalReport, Granularity, Metrics, Scenario, adjust_with_field, derive_counts,
    macro_aggregate, micro_aggregate, precision_from_f, prf, stratify_by_context,
)
from medeval.profiles import PRESETS, EvalProfile, load_profile
from medeval.segmenter import Block, Token, rebase, segment, tokenize

__version__ = "0.1.0"
