"""Scoring medication lists and narrative mentions separately.

i2b2 gold marks each entry as list or narrative. A matched prediction
follows its gold partner; a spurious one joins the stratum of the nearest
gold entity.
"""

from medeval import Document, MatchMode, match_document, parse_i2b2_annotations, stratify_by_context
from medeval.extractors import PredictedEntity
from medeval.corpus_io import CharSpan, MedField

doc = Document.from_text("d1", "Medications:\nLasix 40 mg daily\n"
                               "He was given aspirin in the ED and ibuprofen later\n")
gold = parse_i2b2_annotations(
    'm="lasix" 2:0 2:0||do="40 mg" 2:1 2:2||f="daily" 2:3 2:3||ln="list"\n'
    'm="aspirin" 3:3 3:3||ln="narrative"\n'
    'm="ibuprofen" 3:8 3:8||ln="narrative"\n', doc)


def pred(text, field=MedField.NAME):
    b = doc.text.index(text)
    return PredictedEntity("d1", field, text, CharSpan(b, b + len(text)))


preds = [pred("Lasix"), pred("40 mg", MedField.DOSAGE), pred("daily", MedField.FREQUENCY),
         pred("ED")]  # a spurious hit inside the narrative sentence
trace, _ = match_document(gold, preds, MatchMode.EXACT, doc.text)
print(stratify_by_context([trace], gold, MatchMode.EXACT).to_text())
