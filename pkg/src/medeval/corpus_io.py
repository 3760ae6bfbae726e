"""
Clinical note loading and gold annotation parsing.

Three gold formats are understood, all converted into character-offset
:class:`GoldEntity` records against the raw note text:

i2b2
    One medication entry per line, ``m="..." 19:5 19:5||do="nm"||...||ln="narrative"``.
    Offsets are ``line:token`` pairs; lines are 1-based, token base is configurable.
brat
    Tab-separated standoff rows, ``T1<TAB>Drug 1094 1101<TAB>Lipitor``.
offset-pair
    ``m= "oxybutynin (DITROPAN)" 1527 1546 do= "5 mg" 1566 1568 ...``;
    begin offsets are trusted, end offsets are recomputed from the quoted text.

Parsers never drop or move a span silently: every adjustment, skip or
text/offset disagreement is counted in the optional ``stats`` counter.
"""

from __future__ import annotations

import bisect
import enum
import logging
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from medeval.errors import AlignmentError, CorpusError, ParseError, RangeError

log = logging.getLogger(__name__)


class MedField(str, enum.Enum):
    NAME = "NAME"
    DOSAGE = "DOSAGE"
    FREQUENCY = "FREQUENCY"
    MODE = "MODE"
    DURATION = "DURATION"
    REASON = "REASON"
    STRENGTH = "STRENGTH"
    FORM = "FORM"

    @classmethod
    def parse(cls, value: str) -> "MedField":
        try:
            return cls[value.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown medication field {value!r}") from None


# Table/report ordering.
FIELD_ORDER = list(MedField)


class Context(str, enum.Enum):
    LIST = "LIST"
    NARRATIVE = "NARRATIVE"
    UNKNOWN = "UNKNOWN"


class SourceFormat(str, enum.Enum):
    I2B2 = "I2B2"
    BRAT = "BRAT"
    OFFSET_PAIR = "OFFSET_PAIR"


@dataclass(frozen=True, order=True)
class CharSpan:
    """Half-open ``[begin, end)`` character range."""

    begin: int
    end: int

    def __post_init__(self):
        if self.begin < 0 or self.end <= self.begin:
            raise RangeError(f"invalid span [{self.begin},{self.end})")

    def __len__(self):
        return self.end - self.begin

    def overlaps(self, other: "CharSpan") -> bool:
        return self.begin < other.end and other.begin < self.end

    def shift(self, offset: int) -> "CharSpan":
        return CharSpan(self.begin + offset, self.end + offset)


@dataclass(frozen=True)
class LineTokenRef:
    line: int
    token_start: int
    token_end: int

    def __post_init__(self):
        if self.line < 1:
            raise RangeError(f"line numbers are 1-based, got {self.line}")
        if self.token_end < self.token_start:
            raise RangeError(f"token range {self.token_start}..{self.token_end} is reversed")


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    line_starts: tuple[int, ...]

    @classmethod
    def from_text(cls, doc_id: str, text: str) -> "Document":
        starts = [0]
        starts.extend(m.end() for m in re.finditer("\n", text))
        return cls(doc_id, text, tuple(starts))

    @property
    def n_lines(self) -> int:
        return len(self.line_starts)

    def line_text(self, line: int) -> str:
        """Text of a 1-based line, without its terminator (LF or CRLF)."""
        if not 1 <= line <= self.n_lines:
            raise RangeError(f"{self.id}: line {line} outside 1..{self.n_lines}")
        start = self.line_starts[line - 1]
        end = self.line_starts[line] if line < self.n_lines else len(self.text)
        return self.text[start:end].rstrip("\r\n")

    def line_of(self, offset: int) -> int:
        """1-based line containing a character offset."""
        return bisect.bisect_right(self.line_starts, offset)

    def substring(self, span: CharSpan) -> str:
        return self.text[span.begin:span.end]


@dataclass(frozen=True)
class GoldEntity:
    doc_id: str
    field: MedField
    text: str
    span: CharSpan
    context: Context = Context.UNKNOWN
    source_format: SourceFormat = SourceFormat.BRAT
    text_mismatch: bool = False


def normalize_ws(text: str) -> str:
    """Casefold and collapse whitespace runs; the comparison key for entity text."""
    return " ".join(text.split()).casefold()


# --------------------------------------------------------------------------
# corpus loading
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CorpusLayout:
    text_pattern: str = "*.txt"
    annotation_suffix: str = ".ann"

    def annotation_path(self, gold_dir: Path, doc_id: str) -> Path:
        return Path(gold_dir) / f"{doc_id}{self.annotation_suffix}"


def read_utf8(path: Path) -> str:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise CorpusError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        # newline translation is off on purpose: offsets are measured on raw text
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CorpusError(
            f"{path}: invalid UTF-8 at byte {exc.start} ({exc.reason})"
        ) from exc


def load_documents(path, layout: CorpusLayout | None = None) -> list[Document]:
    layout = layout or CorpusLayout()
    root = Path(path)
    if not root.is_dir():
        raise CorpusError(f"corpus directory not found: {root}")
    files = sorted(p for p in root.glob(layout.text_pattern) if p.is_file())
    return [Document.from_text(p.stem, read_utf8(p)) for p in files]


# --------------------------------------------------------------------------
# shared helpers
# --------------------------------------------------------------------------

def _bump(stats: Counter | None, key: str, n: int = 1):
    if stats is not None:
        stats[key] += n


def _finish(entities: Iterable[GoldEntity], stats: Counter | None) -> list[GoldEntity]:
    """Drop duplicate (field, span) gold entries, keeping the first occurrence."""
    seen = set()
    out = []
    for ent in entities:
        key = (ent.field, ent.span)
        if key in seen:
            _bump(stats, "duplicate_gold")
            log.warning("%s: duplicate gold %s at [%d,%d) dropped",
                        ent.doc_id, ent.field.value, ent.span.begin, ent.span.end)
            continue
        seen.add(key)
        out.append(ent)
    return out


def _make_entity(doc: Document, field: MedField, text: str, span: CharSpan,
                 fmt: SourceFormat, context: Context, stats: Counter | None) -> GoldEntity:
    if span.end > len(doc.text):
        raise RangeError(f"{doc.id}: span [{span.begin},{span.end}) beyond text length {len(doc.text)}")
    mismatch = normalize_ws(doc.substring(span)) != normalize_ws(text)
    if mismatch:
        _bump(stats, "text_mismatch")
        log.warning("%s: %s %r does not match document text %r at [%d,%d)",
                    doc.id, field.value, text, doc.substring(span), span.begin, span.end)
    return GoldEntity(doc.id, field, text, span, context, fmt, mismatch)


# --------------------------------------------------------------------------
# i2b2
# --------------------------------------------------------------------------

I2B2_TAGS = {
    "m": MedField.NAME,
    "do": MedField.DOSAGE,
    "mo": MedField.MODE,
    "f": MedField.FREQUENCY,
    "du": MedField.DURATION,
    "r": MedField.REASON,
}

_I2B2_TAG = re.compile(
    r'(?P<tag>[a-z]+)\s*=\s*"(?P<text>[^"]*)"'
    r'(?P<refs>(?:\s*,?\s*\d+:\d+\s+\d+:\d+)*)'
)
_I2B2_REF = re.compile(r"(\d+):(\d+)\s+(\d+):(\d+)")
_I2B2_SEP = re.compile(r"(?:\s|\|\|)*")


def _i2b2_tags(ann_text: str):
    """Yield (file line, tag, text, refs) for every tag occurrence."""
    for lineno, line in enumerate(ann_text.splitlines(), start=1):
        pos = _I2B2_SEP.match(line, 0).end()
        while pos < len(line):
            m = _I2B2_TAG.match(line, pos)
            if m is None:
                raise ParseError(f"unexpected text {line[pos:pos + 30]!r}", lineno)
            refs = [tuple(int(x) for x in r) for r in _I2B2_REF.findall(m.group("refs"))]
            yield lineno, m.group("tag"), m.group("text"), refs
            pos = _I2B2_SEP.match(line, m.end()).end()


def parse_i2b2_annotations(ann_text: str, doc: Document, token_base: int = 0,
                           split_punct: bool = False,
                           stats: Counter | None = None) -> list[GoldEntity]:
    """Parse i2b2 medication entries into gold entities.

    A new entry starts at every ``m=`` tag; its ``ln=`` value is applied to
    all of the entry's fields. ``"nm"`` (not mentioned) values yield nothing.
    """
    if token_base not in (0, 1):
        raise ValueError("token_base must be 0 or 1")

    entries: list[list] = []
    for lineno, tag, text, refs in _i2b2_tags(ann_text):
        if tag == "m" or not entries:
            entries.append([])
        entries[-1].append((lineno, tag, text, refs))

    out = []
    for entry in entries:
        context = Context.UNKNOWN
        for lineno, tag, text, refs in entry:
            if tag == "ln":
                value = text.strip().lower()
                if value not in ("list", "narrative"):
                    raise ParseError(f'ln="{text}" is neither "list" nor "narrative"', lineno)
                context = Context[value.upper()]
        for lineno, tag, text, refs in entry:
            if tag == "ln":
                continue
            if tag not in I2B2_TAGS:
                raise ParseError(f"unknown tag {tag}=", lineno)
            if text == "nm":
                if refs:
                    raise ParseError(f'{tag}="nm" carries offsets', lineno)
                continue
            if len(refs) != 1:
                raise ParseError(
                    f'{tag}="{text}" needs exactly one offset pair, found {len(refs)} '
                    "(discontiguous annotations are not supported)", lineno)
            l1, t1, l2, t2 = refs[0]
            try:
                span = line_token_range_to_char_span(doc, l1, t1, l2, t2, token_base, split_punct)
            except RangeError as exc:
                raise RangeError(f"annotation line {lineno}: {exc}") from exc
            out.append(_make_entity(doc, I2B2_TAGS[tag], text, span,
                                    SourceFormat.I2B2, context, stats))
    return _finish(out, stats)


def _line_tokens(doc: Document, line: int, split_punct: bool):
    from medeval.segmenter import tokenize

    return tokenize(doc.line_text(line), split_punct=split_punct)


def line_token_range_to_char_span(doc: Document, line_start: int, token_start: int,
                                  line_end: int, token_end: int, token_base: int = 0,
                                  split_punct: bool = False) -> CharSpan:
    """Convert a ``line:token line:token`` pair that may cross lines."""
    if line_end < line_start or (line_end == line_start and token_end < token_start):
        raise RangeError(f"reversed reference {line_start}:{token_start} {line_end}:{token_end}")
    first = _token_at(doc, line_start, token_start - token_base, split_punct)
    last = _token_at(doc, line_end, token_end - token_base, split_punct)
    return CharSpan(first.begin, last.end)


def _token_at(doc: Document, line: int, index: int, split_punct: bool) -> CharSpan:
    tokens = _line_tokens(doc, line, split_punct)
    if not 0 <= index < len(tokens):
        raise RangeError(f"{doc.id}: token index {index} outside line {line} "
                         f"({len(tokens)} tokens)")
    return tokens[index].span.shift(doc.line_starts[line - 1])


def line_token_to_char_span(doc: Document, ref: LineTokenRef, token_base: int = 0,
                            split_punct: bool = False) -> CharSpan:
    return line_token_range_to_char_span(doc, ref.line, ref.token_start, ref.line,
                                         ref.token_end, token_base, split_punct)


# --------------------------------------------------------------------------
# brat
# --------------------------------------------------------------------------

DEFAULT_BRAT_TYPES = {
    "Drug": MedField.NAME,
    "Dosage": MedField.DOSAGE,
    "Route": MedField.MODE,
    "Strength": MedField.STRENGTH,
    "Form": MedField.FORM,
    "Frequency": MedField.FREQUENCY,
    "Duration": MedField.DURATION,
    "Reason": MedField.REASON,
}


def load_type_map(path) -> dict[str, MedField | None]:
    """Read a ``<gold type> <TAB> <FIELD or DROP>`` table."""
    table: dict[str, MedField | None] = {}
    text = read_utf8(Path(path))
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"{path}: expected '<type> <field>'", lineno)
        name, field = parts
        table[name] = None if field.upper() == "DROP" else MedField.parse(field)
    return table


def parse_brat_annotations(ann_text: str, doc: Document,
                           type_map: Mapping[str, MedField | None] | None = None,
                           stats: Counter | None = None,
                           discontiguous: str = "error") -> list[GoldEntity]:
    """Parse brat text-bound (``T``) rows.

    Rows whose type has no field in ``type_map`` (ADE, for instance) are
    skipped and counted. Fragmented spans (``10 15;20 25``) raise unless
    ``discontiguous="hull"``, which covers the fragments with one span.
    """
    type_map = DEFAULT_BRAT_TYPES if type_map is None else type_map
    out = []
    for lineno, line in enumerate(ann_text.splitlines(), start=1):
        if not line.strip() or not line.startswith("T"):
            continue
        cols = line.split("\t")
        if len(cols) < 3:
            raise ParseError("text-bound row needs id, type/offsets and text columns", lineno)
        type_and_offsets, surface = cols[1], cols[2]
        etype, _, offsets = type_and_offsets.partition(" ")
        field = type_map.get(etype)
        if field is None:
            _bump(stats, f"skipped_type:{etype}")
            continue
        fragments = []
        for frag in offsets.split(";"):
            parts = frag.split()
            if len(parts) != 2:
                raise ParseError(f"malformed offsets {offsets!r}", lineno)
            try:
                b, e = int(parts[0]), int(parts[1])
            except ValueError:
                raise ParseError(f"non-integer offsets {offsets!r}", lineno) from None
            if e <= b:
                raise RangeError(f"line {lineno}: end {e} <= begin {b}")
            fragments.append((b, e))
        if len(fragments) > 1:
            if discontiguous != "hull":
                raise ParseError(f"discontiguous span {offsets!r} is not supported", lineno)
            _bump(stats, "discontiguous_hull")
        span = CharSpan(min(b for b, _ in fragments), max(e for _, e in fragments))
        out.append(_make_entity(doc, field, surface, span, SourceFormat.BRAT,
                                Context.UNKNOWN, stats))
    return _finish(out, stats)


# --------------------------------------------------------------------------
# offset-pair
# --------------------------------------------------------------------------

OFFSET_PAIR_TAGS = {
    "m": MedField.NAME,
    "do": MedField.DOSAGE,
    "f": MedField.FREQUENCY,
    "mo": MedField.MODE,
    "str": MedField.STRENGTH,
    "fo": MedField.FORM,
    "du": MedField.DURATION,
    "r": MedField.REASON,
}

_OP_TAG = re.compile(r'(?P<tag>[a-z]+)\s*=\s*"(?P<text>[^"]*)"\s+(?P<begin>-?\d+)\s+(?P<end>-?\d+)')
_OP_SLACK = 2


def _found_near(doc: Document, text: str, begin: int) -> bool:
    key = normalize_ws(text)
    for delta in sorted(range(-_OP_SLACK, _OP_SLACK + 1), key=abs):
        b = begin + delta
        if b < 0:
            continue
        if normalize_ws(doc.text[b:b + len(text)]) == key:
            return True
    return False


def parse_offset_pair_annotations(ann_text: str, doc: Document, strict: bool = True,
                                  stats: Counter | None = None) -> list[GoldEntity]:
    """Parse ``tag= "text" begin end`` entries.

    ``begin`` is authoritative and ``end`` is always ``begin + len(text)``;
    a disagreeing recorded end is counted as ``end_recomputed``. With
    ``strict`` an entry whose text is not found within two characters of
    ``begin`` raises :class:`AlignmentError`; otherwise it is kept with
    ``text_mismatch`` set.
    """
    out = []
    for lineno, line in enumerate(ann_text.splitlines(), start=1):
        pos = 0
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        for m in _OP_TAG.finditer(line):
            gap = line[pos:m.start()]
            if gap.strip(" \t|,;"):
                raise ParseError(f"unexpected text {gap.strip()!r}", lineno)
            pos = m.end()
            tag, text = m.group("tag"), m.group("text")
            if tag not in OFFSET_PAIR_TAGS:
                raise ParseError(f"unknown tag {tag}=", lineno)
            if not text:
                raise ParseError(f"{tag}= has empty text", lineno)
            begin, end = int(m.group("begin")), int(m.group("end"))
            if end != begin + len(text):
                _bump(stats, "end_recomputed")
            span = CharSpan(begin, begin + len(text))
            if not _found_near(doc, text, begin):
                msg = (f"{doc.id}: line {lineno}: {tag}= {text!r} not found near offset "
                       f"{begin} (document has {doc.text[begin:begin + len(text)]!r})")
                if strict:
                    raise AlignmentError(msg)
                log.warning(msg)
                _bump(stats, "unaligned")
            out.append(_make_entity(doc, OFFSET_PAIR_TAGS[tag], text, span,
                                    SourceFormat.OFFSET_PAIR, Context.UNKNOWN, stats))
        if line[pos:].strip(" \t|,;"):
            raise ParseError(f"unexpected text {line[pos:].strip()!r}", lineno)
    return _finish(out, stats)
