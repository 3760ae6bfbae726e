"""Splitting over-length notes into blocks and mapping results back.

Services with a per-request character limit cannot take a long note in one
call. `segment` halves the token list at its midpoint until every block
fits, and `rebase` shifts block-relative spans back into note coordinates.
"""

from medeval import Document, rebase, segment, tokenize

doc = Document.from_text("tiny", "patient took advil for pain")
for block in segment(doc, 14):
    print(f"block {block.ordinal}: {block.text!r} starts at {block.base_offset}")

# An entity found at [0,5) inside the second block is "advil" at [13,18) in the note.
second = segment(doc, 14)[1]
(advil,) = [t for t in tokenize(second.text) if t.text == "advil"]
print("rebased:", advil.span, "->", rebase([advil], second)[0].span)

# A longer note: blocks are verbatim slices, so offsets line up exactly.
words = " ".join(f"word{i}" for i in range(6000))
doc = Document.from_text("long", words)
blocks = segment(doc, 20000)
print(f"\n{len(doc.text)} characters -> {len(blocks)} blocks of sizes",
      [len(b.text) for b in blocks])
whole = [t.span for t in tokenize(doc.text)]
pieced = [t.span for b in blocks for t in rebase(tokenize(b.text), b)]
print("token spans identical after rebase:", whole == pieced)
