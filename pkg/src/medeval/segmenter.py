"""Tokenization, midpoint splitting of over-length notes, and offset re-basing."""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass
from typing import Sequence, TypeVar

from medeval.corpus_io import CharSpan, Document
from medeval.errors import RangeError, UnsplittableError

# Character limit per request of the remote entity service.
DEFAULT_MAX_CHARS = 20000

_WS_TOKEN = re.compile(r"\S+")
_PUNCT_TOKEN = re.compile(r"[^\W_]+|[^\w\s]|_")


@dataclass(frozen=True)
class Token:
    text: str
    span: CharSpan


@dataclass(frozen=True)
class Block:
    text: str
    base_offset: int
    ordinal: int

    @property
    def end_offset(self) -> int:
        return self.base_offset + len(self.text)


def tokenize(text: str, split_punct: bool = False) -> list[Token]:
    """Whitespace tokens, optionally with each punctuation mark split off.

    >>> [t.text for t in tokenize("5 mg.", split_punct=True)]
    ['5', 'mg', '.']
    """
    pattern = _PUNCT_TOKEN if split_punct else _WS_TOKEN
    return [Token(m.group(), CharSpan(m.start(), m.end())) for m in pattern.finditer(text)]


def segment(doc: Document, max_chars: int = DEFAULT_MAX_CHARS) -> list[Block]:
    """Split a document into blocks no longer than ``max_chars``.

    The token list is cut at index ``n // 2`` and each half re-split while it
    is still too long. A block is the verbatim text from its first token to
    its last, so ``base_offset`` locates it exactly in the original note.
    """
    if max_chars <= 0:
        raise ValueError("max_chars must be positive")
    tokens = tokenize(doc.text)
    for tok in tokens:
        if len(tok.span) > max_chars:
            raise UnsplittableError(
                f"{doc.id}: token [{tok.span.begin},{tok.span.end}) is {len(tok.span)} "
                f"characters, longer than max_chars={max_chars}")

    pieces: list[tuple[int, int]] = []

    def split(lo: int, hi: int):
        begin, end = tokens[lo].span.begin, tokens[hi - 1].span.end
        if end - begin <= max_chars:
            pieces.append((begin, end))
            return
        mid = lo + (hi - lo) // 2
        split(lo, mid)
        split(mid, hi)

    if tokens:
        if len(doc.text) <= max_chars:
            pieces.append((tokens[0].span.begin, tokens[-1].span.end))
        else:
            split(0, len(tokens))
    return [Block(doc.text[b:e], b, i) for i, (b, e) in enumerate(pieces)]


E = TypeVar("E")


def _shift(entity, offset: int, limit: int):
    span = entity.span
    if span.end > limit:
        raise RangeError(f"entity [{span.begin},{span.end}) exceeds block length {limit}")
    changes = {"span": span.shift(offset)}
    attrs = getattr(entity, "attributes", None)
    if attrs:
        changes["attributes"] = [_shift(a, offset, limit) for a in attrs]
    return dataclasses.replace(entity, **changes)


def rebase(entities: Sequence[E], block: Block) -> list[E]:
    """Move entity spans from block coordinates into document coordinates.

    Works on any dataclass with a ``span`` field; nested ``attributes`` are
    shifted as well.
    """
    return [_shift(e, block.base_offset, len(block.text)) for e in entities]


def boundary_spans(blocks: Sequence[Block]) -> list[CharSpan]:
    """Gaps between consecutive blocks, in document coordinates."""
    return [CharSpan(a.end_offset, b.base_offset)
            for a, b in zip(blocks, blocks[1:]) if b.base_offset > a.end_offset]
