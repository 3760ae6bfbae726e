"""End-to-end steps: gold loading, extraction over segmented notes, evaluation."""

from __future__ import annotations

import json
import logging
from collections import Counter, defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence, TextIO

from medeval.corpus_io import (
    Document, GoldEntity, SourceFormat, parse_brat_annotations, parse_i2b2_annotations,
    parse_offset_pair_annotations, read_utf8,
)
from medeval.errors import ContractError, MedEvalError, UnsupportedProfileError
from medeval.extractors.baseline import extract_baseline, load_lexicon, load_rules
from medeval.extractors.normalize import FieldMap, normalize
from medeval.extractors.remote import RemotePolicy, ResponseCache, extract_remote
from medeval.extractors.types import PredictedEntity, RawEntity
from medeval.matcher import MatchMode, MatchTrace, match_document
from medeval.metrics import EvalReport, Granularity, StratifiedReport, build_report, stratify_by_context
from medeval.profiles import EvalProfile
from medeval.segmenter import rebase, segment

log = logging.getLogger(__name__)

Extractor = Callable[[str], list[RawEntity]]


# --------------------------------------------------------------------------
# gold
# --------------------------------------------------------------------------

def parse_gold(ann_text: str, doc: Document, profile: EvalProfile,
               stats: Counter | None = None) -> list[GoldEntity]:
    fmt = profile.gold_format
    if fmt is SourceFormat.I2B2:
        return parse_i2b2_annotations(ann_text, doc, profile.token_base,
                                      profile.split_punct, stats)
    if fmt is SourceFormat.BRAT:
        return parse_brat_annotations(ann_text, doc, profile.load_gold_type_map(), stats)
    return parse_offset_pair_annotations(ann_text, doc, profile.strict_offsets, stats)


def load_gold(docs: Sequence[Document], gold_dir, profile: EvalProfile,
              stats: Counter | None = None) -> dict[str, list[GoldEntity]]:
    """Parse one annotation file per document; orphan annotation files are an error."""
    gold_dir = Path(gold_dir)
    known = {d.id for d in docs}
    orphans = sorted(p.name[:-len(profile.gold_suffix)]
                     for p in gold_dir.glob(f"*{profile.gold_suffix}")
                     if p.name[:-len(profile.gold_suffix)] not in known)
    if orphans:
        raise ContractError(f"gold annotations for unknown documents: {', '.join(orphans)}")
    gold = {}
    for doc in docs:
        path = profile.layout.annotation_path(gold_dir, doc.id)
        if not path.is_file():
            log.warning("%s: no gold file %s; treated as no annotations", doc.id, path.name)
            if stats is not None:
                stats["missing_gold_file"] += 1
            gold[doc.id] = []
            continue
        gold[doc.id] = parse_gold(read_utf8(path), doc, profile, stats)
    return gold


# --------------------------------------------------------------------------
# extraction
# --------------------------------------------------------------------------

def baseline_extractor(lexicon_path=None, rules_path=None, window: int = 120) -> Extractor:
    lexicon, rules = load_lexicon(lexicon_path), load_rules(rules_path)
    return lambda text: extract_baseline(text, lexicon, rules, window)


def remote_extractor(endpoint: str, policy: RemotePolicy | None = None,
                     cache_dir=None) -> Extractor:
    cache = ResponseCache(cache_dir) if cache_dir else None
    return lambda text: extract_remote(text, endpoint, policy, cache)


@dataclass
class DocumentExtraction:
    doc_id: str
    predictions: list[PredictedEntity] = field(default_factory=list)
    blocks: int = 0
    boundary_adjacent: int = 0
    error: str | None = None

    def records(self) -> Iterable[dict]:
        if self.error is not None:
            yield {"type": "error", "doc_id": self.doc_id, "message": self.error}
            return
        yield {"type": "document", "doc_id": self.doc_id, "blocks": self.blocks,
               "boundary_adjacent": self.boundary_adjacent}
        for p in sorted(self.predictions, key=lambda p: (p.span.begin, p.span.end, p.field.value)):
            yield {"type": "entity", **p.to_record()}


def extract_document(doc: Document, extractor: Extractor, profile: EvalProfile,
                     field_map: FieldMap) -> DocumentExtraction:
    """Segment, extract block by block, re-base to note offsets and normalize."""
    blocks = segment(doc, profile.max_chars)
    raw: list[RawEntity] = []
    adjacent = 0
    for block in blocks:
        found = rebase(extractor(block.text), block)
        if len(blocks) > 1:
            first, last = block.ordinal == 0, block.ordinal == len(blocks) - 1
            adjacent += sum(1 for e in found
                            if (not first and e.span.begin == block.base_offset)
                            or (not last and e.span.end == block.end_offset))
        raw.extend(found)
    preds = normalize(raw, field_map, profile, doc.id)
    return DocumentExtraction(doc.id, preds, len(blocks), adjacent)


def run_extract(docs: Sequence[Document], extractor: Extractor, profile: EvalProfile,
                out: TextIO, workers: int = 1,
                progress: TextIO | None = None) -> list[DocumentExtraction]:
    """Extract every document and write the prediction records in doc_id order.

    A failing document is recorded as an error record; the run goes on.
    """
    field_map = profile.load_field_map()

    def work(doc):
        try:
            return extract_document(doc, extractor, profile, field_map)
        except MedEvalError as exc:
            return DocumentExtraction(doc.id, error=f"{type(exc).__name__}: {exc}")

    ordered = sorted(docs, key=lambda d: d.id)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(pool.map(work, ordered))
    for res in results:
        for rec in res.records():
            out.write(json.dumps(rec, sort_keys=True) + "\n")
        if progress is not None:
            if res.error:
                print(f"{res.doc_id}: FAILED {res.error}", file=progress)
            else:
                print(f"{res.doc_id}: {len(res.predictions)} entities in {res.blocks} block(s)",
                      file=progress)
    return results


@dataclass
class PredictionSet:
    by_doc: dict[str, list[PredictedEntity]]
    processed: set[str]
    errors: dict[str, str]


def read_predictions(fh: TextIO) -> PredictionSet:
    by_doc: dict[str, list[PredictedEntity]] = defaultdict(list)
    processed, errors = set(), {}
    for lineno, line in enumerate(fh, start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            kind = rec.get("type", "entity")
            if kind == "entity":
                by_doc[rec["doc_id"]].append(PredictedEntity.from_record(rec))
            elif kind == "document":
                processed.add(rec["doc_id"])
            elif kind == "error":
                errors[rec["doc_id"]] = rec.get("message", "")
        except (ValueError, KeyError, TypeError) as exc:
            raise ContractError(f"predictions line {lineno}: {exc}") from None
    return PredictionSet(dict(by_doc), processed, errors)


# --------------------------------------------------------------------------
# evaluation
# --------------------------------------------------------------------------

@dataclass
class Evaluation:
    reports: dict[tuple[MatchMode, Granularity], EvalReport]
    traces: dict[MatchMode, dict[str, MatchTrace]]
    gold: dict[str, list[GoldEntity]]
    predictions: dict[str, list[PredictedEntity]]

    def primary(self, profile: EvalProfile) -> EvalReport:
        return self.reports[(profile.mode, profile.granularity)]


def _check_ids(docs: Sequence[Document], gold: Mapping, preds: Mapping):
    known = {d.id for d in docs}
    unknown = sorted((set(gold) | set(preds)) - known)
    if unknown:
        raise ContractError(f"entities reference unknown documents: {', '.join(unknown)}")


def evaluate(docs: Sequence[Document], gold: Mapping[str, Sequence[GoldEntity]],
             predictions: Mapping[str, Sequence[PredictedEntity]], profile: EvalProfile,
             modes: Sequence[MatchMode] | None = None) -> Evaluation:
    """Score predictions against gold in every requested mode and both granularities."""
    _check_ids(docs, gold, predictions)
    scope = profile.in_scope_fields
    modes = tuple(modes or profile.modes)
    excluded = Counter()
    kept_gold, kept_pred = {}, {}
    for doc in docs:
        g_all = gold.get(doc.id, [])
        excluded.update(g.field for g in g_all if g.field not in scope)
        kept_gold[doc.id] = [g for g in g_all if g.field in scope]
        kept_pred[doc.id] = [p for p in predictions.get(doc.id, []) if p.field in scope]

    reports, traces = {}, {}
    for mode in modes:
        doc_counts, traces[mode] = {}, {}
        for doc in docs:
            trace, counts = match_document(kept_gold[doc.id], kept_pred[doc.id], mode,
                                           doc.text, profile.split_punct)
            traces[mode][doc.id] = trace
            doc_counts[doc.id] = counts
        for gran in Granularity:
            reports[(mode, gran)] = build_report(doc_counts, sorted(scope), mode, gran, excluded)
    return Evaluation(reports, traces, kept_gold, kept_pred)


def stratify(docs: Sequence[Document], gold: Mapping[str, Sequence[GoldEntity]],
             predictions: Mapping[str, Sequence[PredictedEntity]], profile: EvalProfile,
             mode: MatchMode | None = None) -> StratifiedReport:
    if profile.gold_format is not SourceFormat.I2B2:
        raise UnsupportedProfileError(
            f"profile {profile.name!r} reads {profile.gold_format.value} gold, which has no "
            "list/narrative flags; stratification needs i2b2 gold")
    mode = mode or profile.mode
    ev = evaluate(docs, gold, predictions, profile, modes=[mode])
    all_gold = [g for gs in ev.gold.values() for g in gs]
    return stratify_by_context(ev.traces[mode], all_gold, mode,
                               {d.id: d.text for d in docs}, profile.split_punct)
