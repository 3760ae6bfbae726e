"""The offline baseline: a drug lexicon plus attribute regexes.

It needs no network and produces the same entity shape as the remote
service, so the rest of the pipeline treats both alike.
"""

from medeval.extractors import default_field_map, extract_baseline, normalize
from medeval.profiles import PRESETS

text = ("oxybutynin (DITROPAN) 5 mg tablet Take 5 mg by mouth 3 (three) times daily\n"
        "Started vancomycin intravenously for 14 days.")

raw = extract_baseline(text)
print("raw entities (names carry their attributes):")
for e in raw:
    print(f"  {e.type_label:<14} {e.text!r}")
    for a in e.attributes:
        print(f"      {a.type_label:<14} {a.text!r}")

# Normalization maps type labels onto evaluation fields and flattens attributes.
preds = normalize(raw, default_field_map(), PRESETS["offset-pair"], "demo")
print("\npredictions in evaluation fields:")
for p in preds:
    print(f"  {p.field.value:<9} [{p.span.begin},{p.span.end}) {p.text!r} ({p.provenance})")
