"""Entity records produced by extractors, before and after normalization."""

from __future__ import annotations

from dataclasses import dataclass, field

from medeval.corpus_io import CharSpan, MedField


@dataclass(frozen=True)
class RawEntity:
    """One entity as returned by an extractor, in its own label vocabulary.

    ``attributes`` hold sub-entities (dosage, route, ...) attached to a parent
    medication; they share the parent's coordinate frame.
    """

    category: str
    type_label: str
    text: str
    span: CharSpan
    score: float = 1.0
    traits: tuple[str, ...] = ()
    attributes: tuple["RawEntity", ...] = field(default=())

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [0, 1]")


@dataclass(frozen=True)
class PredictedEntity:
    doc_id: str
    field: MedField
    text: str
    span: CharSpan
    score: float = 1.0
    # "top" for a top-level extractor entity, "attribute" for a flattened sub-entity
    provenance: str = "top"

    def to_record(self) -> dict:
        return {"doc_id": self.doc_id, "field": self.field.value, "text": self.text,
                "begin": self.span.begin, "end": self.span.end, "score": self.score,
                "provenance": self.provenance}

    @classmethod
    def from_record(cls, rec: dict) -> "PredictedEntity":
        return cls(rec["doc_id"], MedField.parse(rec["field"]), rec["text"],
                   CharSpan(int(rec["begin"]), int(rec["end"])),
                   float(rec.get("score", 1.0)), rec.get("provenance", "top"))
