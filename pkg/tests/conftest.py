import sys
from pathlib import Path

import pytest

from medeval.corpus_io import Document

DATA = Path(__file__).parent / "data"

I2B2_SAMPLE_LINE19 = "including courses of intravenous nafcillin x 4 weeks"
I2B2_SAMPLE_LINE20 = "and with vancomycin x 4 weeks"
I2B2_SAMPLE_ANN = (
    'm="nafcillin" 19:5 19:5||do="nm"||mo="intravenous" 19:4 19:4||f="nm"||'
    'du="x 4 weeks" 19:6 19:8||r="nm"||ln="narrative"\n'
    'm="vancomycin" 20:3 20:3||do="nm"||mo="nm"||f="nm"||du="x 4 weeks" 20:4 20:6||'
    'r="nm"||ln="narrative"\n'
)

BRAT_SAMPLE_SENTENCE = "MEDICATIONS: Lipitor, Tylenol with Codeine, Dilantin, previously on Decadron"
BRAT_SAMPLE_ANN = (
    "T1\tDrug 1094 1101\tLipitor\n"
    "T2\tDrug 1103 1123\tTylenol with Codeine\n"
    "T3\tDrug 1125 1133\tDilantin\n"
    "T4\tDrug 1149 1157\tDecadron\n"
)

PAIRS_SAMPLE_SENTENCE = "oxybutynin (DITROPAN) 5 mg tablet Take 5 mg by mouth 3 (three) times daily"
PAIRS_SAMPLE_ANN = ('m= "oxybutynin (DITROPAN)" 1527 1546 do= "5 mg" 1566 1568 '
             'f = "3 (three) times daily" 1580 1597 mo= "by mouth" 1571 1577 '
             'str= "5 mg" 1547 1549 fo= "tablet" 1550 1555\n')


def filler(n: int) -> str:
    """``n`` characters of lowercase prose with a newline every ~60 characters."""
    words = "the patient was seen in clinic today and reported feeling well overall".split()
    out, line, i = [], "", 0
    while sum(map(len, out)) + len(line) < n:
        w = words[i % len(words)]
        i += 1
        if len(line) > 60:
            out.append(line + "\n")
            line = ""
        line += w + " "
    text = "".join(out) + line
    return text[:n - 1] + "\n" if n else ""


@pytest.fixture
def i2b2_sample_doc():
    lines = [f"line {i} of the discharge summary" for i in range(1, 19)]
    lines += [I2B2_SAMPLE_LINE19, I2B2_SAMPLE_LINE20, "end of note"]
    return Document.from_text("i2b2-sample", "\n".join(lines) + "\n")


@pytest.fixture
def brat_sample_doc():
    text = filler(1081) + BRAT_SAMPLE_SENTENCE + "\n"
    assert text.index("Lipitor") == 1094
    return Document.from_text("brat-sample", text)


@pytest.fixture
def pairs_sample_doc():
    text = filler(1527) + PAIRS_SAMPLE_SENTENCE + "\n"
    assert text.index("oxybutynin") == 1527
    return Document.from_text("pairs-sample", text)


def pytest_terminal_summary(terminalreporter):
    results = getattr(sys.modules.get("test_acceptance"), "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for line in sorted(results, key=lambda l: int(l.split()[1])):
            terminalreporter.write_line(line)
