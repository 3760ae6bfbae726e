"""
Gold/prediction alignment within one document.

Span modes (``EXACT``, ``LENIENT_SPAN``) pair entities one-to-one with a
maximum bipartite matching per field, so the counts do not depend on input
order. ``LENIENT_TOKEN`` scores whitespace tokens inside the spans instead
of entities.
"""

from __future__ import annotations

import enum
import json
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from medeval.corpus_io import CharSpan, GoldEntity, MedField, normalize_ws
from medeval.errors import ContractError
from medeval.extractors.types import PredictedEntity
from medeval.segmenter import tokenize


class MatchMode(str, enum.Enum):
    EXACT = "EXACT"
    LENIENT_SPAN = "LENIENT_SPAN"
    LENIENT_TOKEN = "LENIENT_TOKEN"


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn) < 0:
            raise ValueError(f"negative count in {self}")

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)

    @property
    def is_empty(self) -> bool:
        return self.tp == self.fp == self.fn == 0

    def as_tuple(self):
        return (self.tp, self.fp, self.fn)


@dataclass
class MatchTrace:
    pairs: list[tuple[GoldEntity, PredictedEntity]] = field(default_factory=list)
    unmatched_gold: list[GoldEntity] = field(default_factory=list)
    unmatched_pred: list[PredictedEntity] = field(default_factory=list)

    def records(self) -> Iterable[dict]:
        """Flat trace rows: one per pair, missed gold and spurious prediction."""
        def span(e):
            return [e.span.begin, e.span.end] if e is not None else None

        rows = [(g, p, "match") for g, p in self.pairs]
        rows += [(g, None, "missed") for g in self.unmatched_gold]
        rows += [(None, p, "spurious") for p in self.unmatched_pred]
        for g, p, verdict in rows:
            ent = g if g is not None else p
            yield {"doc_id": ent.doc_id, "field": ent.field.value,
                   "gold": span(g), "gold_text": g.text if g else None,
                   "pred": span(p), "pred_text": p.text if p else None,
                   "verdict": verdict}

    def sorted_records(self):
        def key(r):
            anchor = r["gold"] or r["pred"]
            return (r["doc_id"], r["field"], anchor[0], anchor[1], r["verdict"])
        return sorted(self.records(), key=key)


def write_traces(traces: Iterable[MatchTrace], fh):
    rows = [r for t in traces for r in t.records()]
    rows.sort(key=lambda r: (r["doc_id"], r["field"], *(r["gold"] or r["pred"]), r["verdict"]))
    for r in rows:
        fh.write(json.dumps(r, sort_keys=True) + "\n")


def is_exact_match(g: GoldEntity, p: PredictedEntity) -> bool:
    return (g.field == p.field and g.span == p.span
            and normalize_ws(g.text) == normalize_ws(p.text))


def is_lenient_match(g: GoldEntity, p: PredictedEntity) -> bool:
    return g.field == p.field and g.span.overlaps(p.span)


def maximum_matching(gold: Sequence, pred: Sequence,
                     compatible: Callable[[object, object], bool]) -> list[tuple[int, int]]:
    """Maximum one-to-one matching by augmenting paths.

    Gold entities are processed in the given order and predictions are tried
    in the given order, which makes the chosen pairs deterministic.
    Returns ``(gold index, pred index)`` pairs.
    """
    adj = [[j for j, p in enumerate(pred) if compatible(g, p)] for g in gold]
    owner = [-1] * len(pred)

    def augment(root):
        # iterative DFS; path[k] is the edge that led to stack frame k + 1
        seen = set()
        stack = [(root, iter(adj[root]))]
        path = []
        while stack:
            i, edges = stack[-1]
            for j in edges:
                if j in seen:
                    continue
                seen.add(j)
                path.append((i, j))
                if owner[j] < 0:
                    for a, b in path:
                        owner[b] = a
                    return
                stack.append((owner[j], iter(adj[owner[j]])))
                break
            else:
                stack.pop()
                if path:
                    path.pop()

    for i in range(len(gold)):
        if adj[i]:
            augment(i)
    return sorted((i, j) for j, i in enumerate(owner) if i >= 0)


def _order(entities):
    return sorted(entities, key=lambda e: (e.span.begin, e.span.end, normalize_ws(e.text)))


def _span_tokens(span: CharSpan, text: str | None, surface: str, split_punct: bool):
    source = text[span.begin:span.end] if text is not None else surface
    return {t.span.shift(span.begin) for t in tokenize(source, split_punct)}


def _token_counts(gold, pred, text, split_punct) -> ConfusionCounts:
    gold_tokens = set().union(*(_span_tokens(g.span, text, g.text, split_punct) for g in gold))
    pred_tokens = set().union(*(_span_tokens(p.span, text, p.text, split_punct) for p in pred))
    tp = sum(1 for t in gold_tokens if any(t.overlaps(p.span) for p in pred))
    fp = sum(1 for t in pred_tokens if not any(t.overlaps(g) for g in gold_tokens))
    return ConfusionCounts(tp, fp, len(gold_tokens) - tp)


def match_document(gold: Sequence[GoldEntity], pred: Sequence[PredictedEntity],
                   mode: MatchMode, text: str | None = None, split_punct: bool = False
                   ) -> tuple[MatchTrace, dict[MedField, ConfusionCounts]]:
    """Align one document's gold and predicted entities field by field.

    ``text`` is the note text, used to tokenize spans in ``LENIENT_TOKEN``
    mode; without it the entities' own surface text is tokenized.
    """
    doc_ids = {e.doc_id for e in gold} | {e.doc_id for e in pred}
    if len(doc_ids) > 1:
        raise ContractError(f"match_document got entities from several documents: {sorted(doc_ids)}")
    mode = MatchMode(mode)

    by_field_gold = defaultdict(list)
    by_field_pred = defaultdict(list)
    for g in gold:
        by_field_gold[g.field].append(g)
    for p in pred:
        by_field_pred[p.field].append(p)

    trace = MatchTrace()
    counts: dict[MedField, ConfusionCounts] = {}
    compatible = is_exact_match if mode is MatchMode.EXACT else is_lenient_match
    for f in sorted(set(by_field_gold) | set(by_field_pred), key=list(MedField).index):
        gs, ps = _order(by_field_gold[f]), _order(by_field_pred[f])
        pairs = maximum_matching(gs, ps, compatible)
        matched_g = {i for i, _ in pairs}
        matched_p = {j for _, j in pairs}
        trace.pairs.extend((gs[i], ps[j]) for i, j in pairs)
        trace.unmatched_gold.extend(g for i, g in enumerate(gs) if i not in matched_g)
        trace.unmatched_pred.extend(p for j, p in enumerate(ps) if j not in matched_p)
        if mode is MatchMode.LENIENT_TOKEN:
            counts[f] = _token_counts(gs, ps, text, split_punct)
        else:
            counts[f] = ConfusionCounts(len(pairs), len(ps) - len(pairs), len(gs) - len(pairs))
    return trace, counts
