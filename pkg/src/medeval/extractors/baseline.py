"""
Offline rule-based medication extractor.

Names come from a case-insensitive longest-match lookup over a word list;
attributes come from a table of named regular expressions. Attributes found
within ``window`` characters after a name are attached to that name, the
rest are emitted on their own. Output uses the remote service's label
vocabulary so both extractors share one field map.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

from medeval.corpus_io import CharSpan, read_utf8
from medeval.errors import ConfigError
from medeval.extractors.types import RawEntity

CATEGORY = "MEDICATION"
DEFAULT_WINDOW = 120

_DOSE_VERB = re.compile(
    r"(?:take|takes|taking|took|give|given|administer|administered|inject|inhale|"
    r"apply|use|instill)\s+$", re.IGNORECASE)
_NAME_TO_AMOUNT_GAP = re.compile(r"[\s,:()\-]*")


@dataclass(frozen=True)
class Rule:
    name: str
    label: str
    pattern: re.Pattern


@dataclass(frozen=True)
class Lexicon:
    labels: dict  # casefolded name -> type label
    pattern: re.Pattern

    def __len__(self):
        return len(self.labels)


def build_lexicon(names: Sequence[str | tuple[str, str]]) -> Lexicon:
    """Compile a lexicon from plain names or ``(name, label)`` pairs."""
    labels = {}
    for item in names:
        name, label = (item, "GENERIC_NAME") if isinstance(item, str) else item
        key = " ".join(name.split()).casefold()
        if key:
            labels.setdefault(key, label)
    if not labels:
        # never matches
        return Lexicon({}, re.compile(r"(?!x)x"))
    alts = []
    for key in sorted(labels, key=lambda k: (-len(k), k)):
        alts.append(r"(?: |\r?\n)".join(re.escape(w) for w in key.split(" ")))
    pattern = re.compile(r"(?<!\w)(?:" + "|".join(alts) + r")(?!\w)", re.IGNORECASE)
    return Lexicon(labels, pattern)


def load_lexicon(path=None) -> Lexicon:
    """Read a word list; a second tab-separated column ``BRAND`` marks brand names."""
    if path is None:
        text = resources.files("medeval.data").joinpath("lexicon.txt").read_text("utf-8")
    else:
        text = read_utf8(Path(path))
    names = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        name, _, kind = line.partition("\t")
        label = "BRAND_NAME" if kind.strip().upper() == "BRAND" else "GENERIC_NAME"
        names.append((name.strip(), label))
    return build_lexicon(names)


def load_rules(path=None) -> list[Rule]:
    if path is None:
        text = resources.files("medeval.data").joinpath("rules.tsv").read_text("utf-8")
        source = "rules.tsv"
    else:
        text, source = read_utf8(Path(path)), str(path)
    rules = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        parts = raw.split("\t", 2)
        if len(parts) != 3:
            raise ConfigError(f"{source}:{lineno}: expected '<name> TAB <label> TAB <regex>'")
        name, label, regex = (p.strip() for p in parts)
        try:
            pattern = re.compile(r"(?<![\w.])(?:" + regex + r")(?!\w)", re.IGNORECASE)
        except re.error as exc:
            raise ConfigError(f"{source}:{lineno}: bad regex for rule {name}: {exc}") from None
        rules.append(Rule(name, label.upper(), pattern))
    return rules


_default_cache: dict = {}


def default_resources():
    if not _default_cache:
        _default_cache["lexicon"] = load_lexicon()
        _default_cache["rules"] = load_rules()
    return _default_cache["lexicon"], _default_cache["rules"]


def _find_names(text: str, lexicon: Lexicon) -> list[tuple[int, int, str]]:
    """Lexicon hits; ``generic (BRAND)`` is merged into one name."""
    found = []
    pos = 0
    while True:
        m = lexicon.pattern.search(text, pos)
        if m is None:
            break
        begin, end = m.span()
        label = lexicon.labels[" ".join(m.group().split()).casefold()]
        paren = re.compile(r"\s*\(\s*").match(text, end)
        if paren:
            inner = lexicon.pattern.match(text, paren.end())
            close = inner and re.compile(r"\s*\)").match(text, inner.end())
            if close:
                end = close.end()
        found.append((begin, end, label))
        pos = end
    return found


def _rule_hits(text: str, rules: Sequence[Rule], names) -> list[tuple[int, int, str]]:
    cands = []
    for order, rule in enumerate(rules):
        for m in rule.pattern.finditer(text):
            if m.end() > m.start():
                cands.append((m.start(), m.end(), order, rule.label))
    cands.sort(key=lambda c: (-(c[1] - c[0]), c[2], c[0]))
    taken = [(b, e) for b, e, _ in names]
    hits = []
    for b, e, _, label in cands:
        if any(b < te and tb < e for tb, te in taken):
            continue
        taken.append((b, e))
        hits.append((b, e, label))
    hits.sort()
    return hits


def _classify_amount(text: str, begin: int, names) -> str:
    if _DOSE_VERB.search(text, max(0, begin - 20), begin):
        return "DOSAGE"
    before = [n for n in names if n[1] <= begin]
    if before:
        name_end = before[-1][1]
        if _NAME_TO_AMOUNT_GAP.fullmatch(text, name_end, begin):
            return "STRENGTH"
    return "DOSAGE"


def extract_baseline(text: str, lexicon: Lexicon | None = None,
                     rules: Sequence[Rule] | None = None,
                     window: int = DEFAULT_WINDOW) -> list[RawEntity]:
    if lexicon is None or rules is None:
        default_lex, default_rules = default_resources()
        lexicon = default_lex if lexicon is None else lexicon
        rules = default_rules if rules is None else rules

    names = _find_names(text, lexicon)
    attrs = []
    for b, e, label in _rule_hits(text, rules, names):
        if label == "AMOUNT":
            label = _classify_amount(text, b, names)
        attrs.append(RawEntity(CATEGORY, label, text[b:e], CharSpan(b, e)))

    attached: dict[int, list[RawEntity]] = {i: [] for i in range(len(names))}
    loose = []
    for attr in attrs:
        owner = None
        for i, (b, e, _) in enumerate(names):
            if e > attr.span.begin:
                break
            owner = i
        if owner is not None and attr.span.begin - names[owner][1] <= window:
            attached[owner].append(attr)
        else:
            loose.append(attr)

    out = [RawEntity(CATEGORY, label, text[b:e], CharSpan(b, e), attributes=tuple(attached[i]))
           for i, (b, e, label) in enumerate(names)]
    out.extend(loose)
    out.sort(key=lambda r: (r.span.begin, r.span.end))
    return out
