"""Exact, lenient-span and lenient-token matching on one example.

Gold marks "Tylenol with Codeine"; the system only found "Tylenol".
"""

from medeval import CharSpan, Context, GoldEntity, MatchMode, MedField, match_document, prf
from medeval.extractors import PredictedEntity

text = "MEDICATIONS: Lipitor, Tylenol with Codeine"
gold = [GoldEntity("d", MedField.NAME, "Lipitor", CharSpan(13, 20), Context.UNKNOWN),
        GoldEntity("d", MedField.NAME, "Tylenol with Codeine", CharSpan(22, 42), Context.UNKNOWN)]
pred = [PredictedEntity("d", MedField.NAME, "lipitor", CharSpan(13, 20)),
        PredictedEntity("d", MedField.NAME, "Tylenol", CharSpan(22, 29))]

for mode in MatchMode:
    trace, counts = match_document(gold, pred, mode, text)
    c = counts[MedField.NAME]
    p, r, f = prf(c).rounded()
    print(f"{mode.value:<13} tp={c.tp} fp={c.fp} fn={c.fn}  P={p} R={r} F={f}")

# Traces say which pairs matched; they are what the evaluate command writes out.
trace, _ = match_document(gold, pred, MatchMode.EXACT, text)
for rec in trace.sorted_records():
    print(" ", rec["verdict"], rec.get("gold_text"), "|", rec.get("pred_text"))
