"""Precision/recall/F-score, aggregation, counterfactual adjustment and stratification."""

from __future__ import annotations

import csv
import enum
import io
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from medeval.corpus_io import Context, FIELD_ORDER, GoldEntity, MedField
from medeval.errors import ContractError, InfeasibleScenarioError, UnsupportedProfileError
from medeval.matcher import ConfusionCounts, MatchMode, MatchTrace, match_document

log = logging.getLogger(__name__)

STRATUM_RULE = ("unmatched predictions are assigned to the stratum of the nearest gold "
                "entity by character offset (ties go to the earlier entity)")


class Granularity(str, enum.Enum):
    MICRO = "MICRO"
    MACRO = "MACRO"


@dataclass(frozen=True)
class Metrics:
    precision: float = 0.0
    recall: float = 0.0
    f_score: float = 0.0

    def as_tuple(self):
        return (self.precision, self.recall, self.f_score)

    def rounded(self, places: int = 3):
        return tuple(f"{v:.{places}f}" for v in self.as_tuple())


def harmonic_mean(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def prf(c: ConfusionCounts) -> Metrics:
    p = c.tp / (c.tp + c.fp) if c.tp + c.fp else 0.0
    r = c.tp / (c.tp + c.fn) if c.tp + c.fn else 0.0
    return Metrics(p, r, harmonic_mean(p, r))


def pool(cells: Iterable[ConfusionCounts]) -> ConfusionCounts:
    total = ConfusionCounts()
    for c in cells:
        total = total + c
    return total


def micro_aggregate(cells: Iterable[ConfusionCounts]) -> Metrics:
    return prf(pool(cells))


def macro_aggregate(cells: Iterable[ConfusionCounts]) -> Metrics:
    """Mean of per-document P, R and F.

    Each cell is one document's pooled counts. Documents with no gold and no
    predicted entity are left out of the mean.
    """
    scored = [prf(c) for c in cells if not c.is_empty]
    if not scored:
        log.warning("macro average over zero scoreable documents")
        return Metrics()
    n = len(scored)
    return Metrics(sum(m.precision for m in scored) / n,
                   sum(m.recall for m in scored) / n,
                   sum(m.f_score for m in scored) / n)


def _round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def derive_counts(p: float, r: float, n_gold: int) -> ConfusionCounts:
    """Reconstruct integer counts from published precision, recall and gold size."""
    if n_gold <= 0:
        raise ContractError("n_gold must be positive")
    if not 0 <= r <= 1 or not 0 <= p <= 1:
        raise ContractError(f"precision {p} and recall {r} must lie in [0, 1]")
    if p <= 0:
        raise ContractError("precision 0 leaves false positives undetermined")
    tp = _round_half_up(r * n_gold)
    fp = _round_half_up(tp / p - tp)
    return ConfusionCounts(tp, fp, n_gold - tp)


def precision_from_f(f: float, r: float) -> float:
    """Precision that gives F-score ``f`` at recall ``r``."""
    if not (f > 0 and 2 * r > f):
        raise InfeasibleScenarioError(
            f"no precision gives F={f} at recall={r}: need 2*recall > F > 0")
    p = f * r / (2 * r - f)
    if p > 1 + 1e-12:
        raise InfeasibleScenarioError(
            f"F={f} at recall={r} would need precision {p:.3f} > 1")
    return min(p, 1.0)


def adjust_with_field(baseline: ConfusionCounts, field_counts: ConfusionCounts) -> Metrics:
    return prf(baseline + field_counts)


@dataclass(frozen=True)
class Scenario:
    """Assumed performance for a field the system cannot produce.

    ``kind`` is ``perfect``, ``pr`` (precision and recall given) or
    ``f_at_recall`` (F-score given, recall assumed).
    """

    kind: str
    a: float = 0.0
    b: float = 0.0

    @classmethod
    def parse(cls, spec: str) -> "Scenario":
        """``perfect``, ``pr:0.668,0.331`` or ``f_at_recall:0.728,0.6``."""
        kind, _, args = spec.partition(":")
        kind = kind.strip().lower()
        if kind == "perfect":
            return cls("perfect")
        if kind not in ("pr", "f_at_recall"):
            raise ValueError(f"unknown scenario {spec!r}")
        try:
            a, b = (float(x) for x in args.split(","))
        except ValueError:
            raise ValueError(f"scenario {spec!r} needs two comma-separated numbers") from None
        return cls(kind, a, b)

    def counts(self, n_gold: int) -> ConfusionCounts:
        if n_gold == 0:
            return ConfusionCounts()
        if self.kind == "perfect":
            return ConfusionCounts(n_gold, 0, 0)
        if self.kind == "pr":
            return derive_counts(self.a, self.b, n_gold)
        return derive_counts(precision_from_f(self.a, self.b), self.b, n_gold)

    def __str__(self):
        if self.kind == "perfect":
            return "perfect"
        return f"{self.kind}({self.a:g}, {self.b:g})"


# --------------------------------------------------------------------------
# reports
# --------------------------------------------------------------------------

@dataclass
class EvalReport:
    mode: MatchMode
    granularity: Granularity
    fields: list[MedField]
    # doc_id -> field -> counts; every doc and in-scope field present
    counts: dict[str, dict[MedField, ConfusionCounts]]
    excluded_gold: dict[MedField, int] = field(default_factory=dict)

    @property
    def overall_label(self) -> str:
        return "Overall" if MedField.REASON in self.fields else "Overall w/o Reason"

    def field_counts(self, f: MedField) -> ConfusionCounts:
        return pool(cells[f] for cells in self.counts.values())

    def pooled(self) -> ConfusionCounts:
        return pool(self.field_counts(f) for f in self.fields)

    def field_metrics(self, f: MedField) -> Metrics:
        if self.granularity is Granularity.MICRO:
            return prf(self.field_counts(f))
        return macro_aggregate(cells[f] for cells in self.counts.values())

    def overall(self) -> Metrics:
        if self.granularity is Granularity.MICRO:
            return prf(self.pooled())
        return macro_aggregate(pool(cells[f] for f in self.fields)
                               for cells in self.counts.values())

    def rows(self) -> list[dict]:
        out = []
        for f in self.fields:
            m, c = self.field_metrics(f), self.field_counts(f)
            out.append(_row(f.value.title(), m, c))
        out.append(_row(self.overall_label, self.overall(), self.pooled()))
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["mode", "granularity", "field", "precision", "recall", "f_score",
                         "tp", "fp", "fn"])
        for r in self.rows():
            writer.writerow([self.mode.value, self.granularity.value, r["field"],
                             f"{r['precision']:.3f}", f"{r['recall']:.3f}", f"{r['f_score']:.3f}",
                             r["tp"], r["fp"], r["fn"]])
        return buf.getvalue()

    def to_text(self) -> str:
        lines = [f"{self.mode.value} matching, {self.granularity.value} average",
                 f"{'Field':<20}{'Precision':>10}{'Recall':>10}{'F-Score':>10}"]
        for r in self.rows():
            lines.append(f"{r['field']:<20}{r['precision']:>10.3f}{r['recall']:>10.3f}"
                         f"{r['f_score']:>10.3f}")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "granularity": self.granularity.value,
            "fields": [f.value for f in self.fields],
            "rows": self.rows(),
            "excluded_gold": {f.value: n for f, n in sorted(self.excluded_gold.items())},
            "counts": {doc: {f.value: list(c.as_tuple()) for f, c in cells.items()}
                       for doc, cells in sorted(self.counts.items())},
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "EvalReport":
        counts = {doc: {MedField.parse(f): ConfusionCounts(*c) for f, c in cells.items()}
                  for doc, cells in data["counts"].items()}
        return cls(MatchMode(data["mode"]), Granularity(data["granularity"]),
                   [MedField.parse(f) for f in data["fields"]], counts,
                   {MedField.parse(f): int(n) for f, n in data.get("excluded_gold", {}).items()})


def _row(label, m: Metrics, c: ConfusionCounts) -> dict:
    return {"field": label, "precision": m.precision, "recall": m.recall,
            "f_score": m.f_score, "tp": c.tp, "fp": c.fp, "fn": c.fn}


def build_report(doc_counts: Mapping[str, Mapping[MedField, ConfusionCounts]],
                 fields: Sequence[MedField], mode: MatchMode,
                 granularity: Granularity = Granularity.MICRO,
                 excluded_gold: Mapping[MedField, int] | None = None) -> EvalReport:
    fields = [f for f in FIELD_ORDER if f in set(fields)]
    counts = {doc: {f: cells.get(f, ConfusionCounts()) for f in fields}
              for doc, cells in doc_counts.items()}
    return EvalReport(MatchMode(mode), Granularity(granularity), fields, counts,
                      dict(excluded_gold or {}))


# --------------------------------------------------------------------------
# list / narrative stratification
# --------------------------------------------------------------------------

@dataclass
class Stratum:
    counts: ConfusionCounts
    metrics: Metrics
    n_gold: int
    n_pred: int


@dataclass
class StratifiedReport:
    strata: dict[Context, Stratum]
    unassigned_pred: int = 0
    unknown_gold: int = 0
    rule: str = STRATUM_RULE

    def to_text(self) -> str:
        lines = [f"# {self.rule}",
                 f"{'Stratum':<12}{'Entities':>10}{'Precision':>11}{'Recall':>9}{'F-Score':>9}"]
        for ctx, s in self.strata.items():
            p, r, f = s.metrics.rounded()
            lines.append(f"{ctx.value:<12}{s.n_gold:>10}{p:>11}{r:>9}{f:>9}")
        if self.unknown_gold:
            lines.append(f"gold entities without list/narrative flag: {self.unknown_gold}")
        if self.unassigned_pred:
            lines.append(f"predictions in documents without flagged gold: {self.unassigned_pred}")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {"rule": self.rule, "unassigned_pred": self.unassigned_pred,
                "unknown_gold": self.unknown_gold,
                "strata": {c.value: {"n_gold": s.n_gold, "n_pred": s.n_pred,
                                     "tp": s.counts.tp, "fp": s.counts.fp, "fn": s.counts.fn,
                                     "precision": s.metrics.precision,
                                     "recall": s.metrics.recall,
                                     "f_score": s.metrics.f_score}
                           for c, s in self.strata.items()}}


def _nearest(span, candidates: Sequence[GoldEntity]) -> GoldEntity | None:
    def distance(g):
        if g.span.overlaps(span):
            return 0
        return g.span.begin - span.end if g.span.begin >= span.end else span.begin - g.span.end
    return min(candidates, key=lambda g: (distance(g), g.span.begin, g.span.end), default=None)


def stratify_by_context(traces: Mapping[str, MatchTrace] | Iterable[MatchTrace],
                        gold: Sequence[GoldEntity], mode: MatchMode = MatchMode.EXACT,
                        texts: Mapping[str, str] | None = None,
                        split_punct: bool = False) -> StratifiedReport:
    """Score list and narrative gold entities separately.

    A matched prediction follows its gold partner; an unmatched one goes to
    the stratum of the nearest flagged gold entity in its document. Each
    stratum is then re-matched in ``mode`` and micro-averaged.
    """
    if not any(g.context is not Context.UNKNOWN for g in gold):
        raise UnsupportedProfileError(
            "stratification needs gold entities with list/narrative flags (i2b2 gold)")
    if isinstance(traces, Mapping):
        traces = traces.values()
    texts = texts or {}

    gold_by_doc = defaultdict(list)
    for g in gold:
        gold_by_doc[g.doc_id].append(g)

    strat_gold = defaultdict(list)  # (doc, ctx) -> gold
    strat_pred = defaultdict(list)
    unknown_gold = 0
    for g in gold:
        if g.context is Context.UNKNOWN:
            unknown_gold += 1
        else:
            strat_gold[(g.doc_id, g.context)].append(g)

    unassigned = 0
    for trace in traces:
        for g, p in trace.pairs:
            if g.context is Context.UNKNOWN:
                unassigned += 1
            else:
                strat_pred[(p.doc_id, g.context)].append(p)
        for p in trace.unmatched_pred:
            flagged = [g for g in gold_by_doc.get(p.doc_id, ()) if g.context is not Context.UNKNOWN]
            near = _nearest(p.span, flagged)
            if near is None:
                unassigned += 1
            else:
                strat_pred[(p.doc_id, near.context)].append(p)

    strata = {}
    for ctx in (Context.LIST, Context.NARRATIVE):
        cells = []
        n_gold = n_pred = 0
        docs = sorted({d for d, c in strat_gold if c is ctx} | {d for d, c in strat_pred if c is ctx})
        for doc in docs:
            gs, ps = strat_gold.get((doc, ctx), []), strat_pred.get((doc, ctx), [])
            n_gold += len(gs)
            n_pred += len(ps)
            _, counts = match_document(gs, ps, mode, texts.get(doc), split_punct)
            cells.extend(counts.values())
        total = pool(cells)
        strata[ctx] = Stratum(total, prf(total), n_gold, n_pred)
    return StratifiedReport(strata, unassigned, unknown_gold)
