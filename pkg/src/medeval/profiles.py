"""
Evaluation profiles: which gold format, matching mode, fields and conventions a run uses.

Three presets ship with the package (``i2b2``, ``n2c2``, ``offset-pair``).
A profile file is INI with one ``[profile]`` section; ``base`` names the
preset it starts from and every other key overrides one attribute::

    [profile]
    base = i2b2
    token_base = 1
    field_map = i2b2_strength_as_dosage
    fields = NAME, DOSAGE, FREQUENCY, MODE, DURATION
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass
from pathlib import Path

from medeval.corpus_io import (
    DEFAULT_BRAT_TYPES, CorpusLayout, MedField, SourceFormat, load_type_map,
)
from medeval.errors import ConfigError
from medeval.extractors.normalize import FieldMap
from medeval.matcher import MatchMode
from medeval.metrics import Granularity
from medeval.segmenter import DEFAULT_MAX_CHARS

_BASE_FIELDS = frozenset({MedField.NAME, MedField.DOSAGE, MedField.FREQUENCY,
                          MedField.MODE, MedField.DURATION})


@dataclass(frozen=True)
class EvalProfile:
    name: str
    gold_format: SourceFormat
    mode: MatchMode
    granularity: Granularity = Granularity.MICRO
    extra_modes: tuple[MatchMode, ...] = ()
    in_scope_fields: frozenset = _BASE_FIELDS
    field_map: str = "default"
    gold_type_map: str | None = None
    token_base: int = 0
    split_punct: bool = False
    max_chars: int = DEFAULT_MAX_CHARS
    score_threshold: float = 0.0
    gold_suffix: str = ".ann"
    text_pattern: str = "*.txt"
    strict_offsets: bool = True

    def __post_init__(self):
        if self.token_base not in (0, 1):
            raise ConfigError(f"token_base must be 0 or 1, got {self.token_base}")
        if self.max_chars <= 0:
            raise ConfigError("max_chars must be positive")
        if not 0.0 <= self.score_threshold <= 1.0:
            raise ConfigError("score_threshold must lie in [0, 1]")

    @property
    def modes(self) -> tuple[MatchMode, ...]:
        return (self.mode,) + tuple(m for m in self.extra_modes if m is not self.mode)

    @property
    def layout(self) -> CorpusLayout:
        return CorpusLayout(self.text_pattern, self.gold_suffix)

    def load_field_map(self) -> FieldMap:
        return FieldMap.load(self.field_map)

    def load_gold_type_map(self):
        if self.gold_type_map is None:
            return dict(DEFAULT_BRAT_TYPES)
        return load_type_map(self.gold_type_map)


PRESETS = {
    "i2b2": EvalProfile(
        name="i2b2", gold_format=SourceFormat.I2B2, mode=MatchMode.EXACT,
        extra_modes=(MatchMode.LENIENT_TOKEN,), in_scope_fields=_BASE_FIELDS,
        gold_suffix=".m"),
    "n2c2": EvalProfile(
        name="n2c2", gold_format=SourceFormat.BRAT, mode=MatchMode.LENIENT_SPAN,
        extra_modes=(MatchMode.EXACT,),
        in_scope_fields=_BASE_FIELDS | {MedField.STRENGTH, MedField.FORM},
        gold_suffix=".ann"),
    "offset-pair": EvalProfile(
        name="offset-pair", gold_format=SourceFormat.OFFSET_PAIR, mode=MatchMode.EXACT,
        extra_modes=(MatchMode.LENIENT_SPAN,),
        in_scope_fields=_BASE_FIELDS | {MedField.STRENGTH, MedField.FORM},
        gold_suffix=".pairs"),
}


def _parse_bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def _parse_fields(value: str) -> frozenset:
    return frozenset(MedField.parse(v) for v in value.replace(",", " ").split())


def _parse_modes(value: str) -> tuple:
    return tuple(MatchMode(v.strip().upper()) for v in value.replace(",", " ").split())


_CONVERTERS = {
    "name": str,
    "gold_format": lambda v: SourceFormat(v.strip().upper().replace("-", "_")),
    "mode": lambda v: MatchMode(v.strip().upper()),
    "extra_modes": _parse_modes,
    "granularity": lambda v: Granularity(v.strip().upper()),
    "fields": _parse_fields,
    "field_map": str.strip,
    "gold_type_map": str.strip,
    "token_base": int,
    "split_punct": _parse_bool,
    "max_chars": int,
    "score_threshold": float,
    "gold_suffix": str.strip,
    "text_pattern": str.strip,
    "strict_offsets": _parse_bool,
}


def apply_overrides(profile: EvalProfile, overrides: dict) -> EvalProfile:
    """Return ``profile`` with string-valued overrides converted and applied."""
    changes = {}
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in _CONVERTERS:
            raise ConfigError(f"unknown profile key {key!r}")
        try:
            converted = _CONVERTERS[key](value) if isinstance(value, str) else value
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from None
        changes["in_scope_fields" if key == "fields" else key] = converted
    return dataclasses.replace(profile, **changes)


def load_profile(name_or_path: str, overrides: dict | None = None) -> EvalProfile:
    """Resolve a preset name or an INI profile file, then apply flag overrides."""
    if name_or_path in PRESETS:
        profile = PRESETS[name_or_path]
    else:
        path = Path(name_or_path)
        if not path.is_file():
            raise ConfigError(f"{name_or_path!r} is neither a preset "
                              f"({', '.join(PRESETS)}) nor a profile file")
        parser = configparser.ConfigParser()
        try:
            parser.read(path, encoding="utf-8")
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None
        if not parser.has_section("profile"):
            raise ConfigError(f"{path}: missing [profile] section")
        values = dict(parser["profile"])
        base = values.pop("base", None)
        if base is None or base not in PRESETS:
            raise ConfigError(f"{path}: 'base' must name a preset ({', '.join(PRESETS)})")
        values.setdefault("name", path.stem)
        profile = _resolve_paths(apply_overrides(PRESETS[base], values), path.parent)
    return apply_overrides(profile, overrides or {})


def _resolve_paths(profile: EvalProfile, root: Path) -> EvalProfile:
    changes = {}
    for key in ("field_map", "gold_type_map"):
        value = getattr(profile, key)
        if value and (root / value).is_file():
            changes[key] = str(root / value)
    return dataclasses.replace(profile, **changes)
