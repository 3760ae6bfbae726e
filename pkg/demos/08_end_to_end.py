"""A whole run through the command line: extract, evaluate, report, adjust.

A three-note corpus with offset-pair gold is written to a temporary
directory, then scored with the offline baseline extractor.
"""

import tempfile
from pathlib import Path

from medeval.cli import main

NOTES = {
    "n1": ("Lasix 40 mg tablet by mouth daily.\n",
           'm= "Lasix" 0 5 str= "40 mg" 6 11 fo= "tablet" 12 18 mo= "by mouth" 19 27 '
           'f= "daily" 28 33\n'),
    "n2": ("Insulin glargine 20 units at bedtime for diabetes.\n",
           'm= "Insulin glargine" 0 16 do= "20 units" 17 25 f= "at bedtime" 26 36 '
           'r= "diabetes" 41 49\n'),
    "n3": ("No medications today.\n", ""),
}

with tempfile.TemporaryDirectory() as tmp:
    root = Path(tmp)
    corpus = root / "corpus"
    corpus.mkdir()
    for name, (text, gold) in NOTES.items():
        (corpus / f"{name}.txt").write_text(text)
        (corpus / f"{name}.pairs").write_text(gold)

    preds = root / "preds.jsonl"
    print("$ medeval extract ...", flush=True)
    main(["extract", str(corpus), "--profile", "offset-pair", "-o", str(preds)])
    print("\n$ medeval evaluate ...", flush=True)
    main(["evaluate", str(corpus), "--profile", "offset-pair", "--predictions", str(preds),
          "-o", str(root / "out")])
    print("$ medeval report --format csv")
    main(["report", str(root / "out" / "report.json"), "--format", "csv"])
    print("\n$ medeval adjust --field REASON --scenario perfect")
    main(["adjust", str(root / "out" / "report.json"), "--field", "REASON", "--scenario", "perfect"])
