"""Mapping extractor labels onto the evaluation field taxonomy."""

from __future__ import annotations

import fnmatch
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from medeval.corpus_io import MedField, read_utf8
from medeval.errors import ConfigError
from medeval.extractors.types import PredictedEntity, RawEntity

DROP = None
DROPPED_TYPES = {"RATE"}
DROPPED_TRAITS = {"NEGATION"}


@dataclass(frozen=True)
class FieldMap:
    """Ordered ``(category glob, type glob) -> field`` rules; first match wins.

    A ``None`` target drops the entity. A catch-all drop rule is appended
    when the table does not end with one.
    """

    rules: tuple[tuple[str, str, MedField | None], ...]

    def __post_init__(self):
        if not self.rules or self.rules[-1][:2] != ("*", "*"):
            object.__setattr__(self, "rules", tuple(self.rules) + (("*", "*", DROP),))

    def lookup(self, category: str, type_label: str) -> MedField | None:
        for cat_pat, type_pat, target in self.rules:
            if fnmatch.fnmatchcase(category.upper(), cat_pat.upper()) and \
                    fnmatch.fnmatchcase(type_label.upper(), type_pat.upper()):
                return target
        return DROP  # unreachable: the catch-all always matches

    @classmethod
    def parse(cls, text: str, source: str = "<field map>") -> "FieldMap":
        rules = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ConfigError(f"{source}:{lineno}: expected '<category> <type> <FIELD|DROP>'")
            cat, typ, target = parts
            try:
                field = DROP if target.upper() == "DROP" else MedField.parse(target)
            except ValueError as exc:
                raise ConfigError(f"{source}:{lineno}: {exc}") from None
            rules.append((cat, typ, field))
        return cls(tuple(rules))

    @classmethod
    def load(cls, name_or_path: str) -> "FieldMap":
        """Load a shipped map by name (``default``, ``i2b2_strength_as_dosage``) or a file."""
        path = Path(name_or_path)
        if path.is_file():
            return cls.parse(read_utf8(path), str(path))
        res = resources.files("medeval.data").joinpath(f"field_map_{name_or_path}.tsv")
        if not res.is_file():
            raise ConfigError(f"no field map named {name_or_path!r}")
        return cls.parse(res.read_text("utf-8"), res.name)


def default_field_map() -> FieldMap:
    return FieldMap.load("default")


def flatten(raw: Iterable[RawEntity]):
    """Yield ``(entity, provenance)`` for parents and their attribute sub-entities."""
    for ent in raw:
        yield ent, "top"
        for attr in ent.attributes:
            if not attr.category:
                attr = RawEntity(ent.category, attr.type_label, attr.text, attr.span,
                                 attr.score, attr.traits, attr.attributes)
            for sub, _ in flatten([attr]):
                yield sub, "attribute"


def normalize(raw: Sequence[RawEntity | PredictedEntity], field_map: FieldMap,
              profile, doc_id: str) -> list[PredictedEntity]:
    """Flatten, map, and filter extractor output for one document.

    Drops rate mentions, negated mentions, unmapped labels, fields outside
    ``profile.in_scope_fields`` and scores under ``profile.score_threshold``.
    Repeated ``(field, span)`` pairs, which arise when an attribute is also
    reported top-level, are kept once. Already-normalized entities pass
    through the scope and threshold filters only.
    """
    in_scope = set(profile.in_scope_fields)
    threshold = profile.score_threshold
    out: list[PredictedEntity] = []
    seen = set()

    def keep(pred: PredictedEntity):
        key = (pred.field, pred.span)
        if pred.field in in_scope and pred.score >= threshold and key not in seen:
            seen.add(key)
            out.append(pred)

    for item in raw:
        if isinstance(item, PredictedEntity):
            keep(item)
            continue
        for ent, provenance in flatten([item]):
            if ent.type_label.upper() in DROPPED_TYPES:
                continue
            if DROPPED_TRAITS & {t.upper() for t in ent.traits}:
                continue
            field = field_map.lookup(ent.category, ent.type_label)
            if field is DROP:
                continue
            keep(PredictedEntity(doc_id, field, ent.text, ent.span, ent.score, provenance))
    return out
