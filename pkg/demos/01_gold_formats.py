"""Reading gold annotations in the three supported formats.

Every format ends up as the same `GoldEntity` records: a field, the
annotated text and a half-open character span in the note.
"""

from medeval import (
    Document, parse_brat_annotations, parse_i2b2_annotations, parse_offset_pair_annotations,
)

# i2b2 style: entries address text by line number and token position.
# "nm" means the field was not mentioned, so it yields no entity.
note = Document.from_text("i2b2-demo", (
    "Hospital course:\n"
    "including courses of intravenous nafcillin x 4 weeks\n"
    "and with vancomycin x 4 weeks\n"))
ann = ('m="nafcillin" 2:4 2:4||do="nm"||mo="intravenous" 2:3 2:3||f="nm"||'
       'du="x 4 weeks" 2:5 2:7||r="nm"||ln="narrative"\n'
       'm="vancomycin" 3:2 3:2||do="nm"||mo="nm"||f="nm"||du="x 4 weeks" 3:3 3:5||'
       'r="nm"||ln="narrative"\n')
print("i2b2 (0-based tokens):")
for e in parse_i2b2_annotations(ann, note):
    print(f"  {e.field.value:<9} [{e.span.begin},{e.span.end}) {note.substring(e.span)!r} "
          f"context={e.context.value}")

# brat standoff: character offsets and a type label per row.
note = Document.from_text("brat-demo", "MEDICATIONS: Lipitor, Tylenol with Codeine\n")
ann = "T1\tDrug 13 20\tLipitor\nT2\tDrug 22 42\tTylenol with Codeine\nT3\tReason 0 5\tMEDIC\n"
print("\nbrat:")
for e in parse_brat_annotations(ann, note):
    print(f"  {e.field.value:<9} [{e.span.begin},{e.span.end}) {e.text!r}")

# Offset pairs: tag= "text" begin end. The begin offset is trusted and the end
# is recomputed from the text length, because some exports store it wrongly.
note = Document.from_text("pairs-demo", "oxybutynin 5 mg tablet by mouth daily\n")
ann = 'm= "oxybutynin" 0 9 str= "5 mg" 11 15 fo= "tablet" 16 22 mo= "by mouth" 23 31\n'
print("\noffset pairs:")
for e in parse_offset_pair_annotations(ann, note):
    print(f"  {e.field.value:<9} [{e.span.begin},{e.span.end}) {e.text!r}")
