import io
import json
import random

import networkx as nx
import pytest

from synth import FIELDS, brute_force_tp, random_match_doc as random_doc
from medeval.corpus_io import CharSpan, Context, GoldEntity, MedField
from medeval.errors import ContractError
from medeval.extractors.types import PredictedEntity
from medeval.matcher import (
    ConfusionCounts, MatchMode, is_exact_match, is_lenient_match, match_document,
    maximum_matching, write_traces,
)

def G(begin, end, text="x", field=MedField.NAME, doc="d", ctx=Context.UNKNOWN):
    return GoldEntity(doc, field, text, CharSpan(begin, end), ctx)


def P(begin, end, text="x", field=MedField.NAME, doc="d"):
    return PredictedEntity(doc, field, text, CharSpan(begin, end))


# ---- predicates --------------------------------------------------------------

def test_exact_examples():
    g = G(1094, 1101, "Lipitor")
    assert is_exact_match(g, P(1094, 1101, "Lipitor"))
    assert is_exact_match(g, P(1094, 1101, "lipitor"))
    assert not is_exact_match(G(1103, 1123, "Tylenol with Codeine"), P(1103, 1110, "Tylenol"))
    assert is_exact_match(G(0, 9, "a\nb"), P(0, 9, "a b"))
    assert not is_exact_match(g, P(1094, 1101, "Lipitor", MedField.DOSAGE))


def test_lenient_examples():
    assert is_lenient_match(G(1103, 1123, "Tylenol with Codeine"), P(1103, 1110, "Tylenol"))
    assert not is_lenient_match(G(0, 5), P(0, 5, field=MedField.DOSAGE))
    assert not is_lenient_match(G(0, 5), P(5, 9))


# ---- match_document ----------------------------------------------------------

@pytest.mark.parametrize("mode", list(MatchMode))
def test_identical_lists(mode):
    gold = [G(0, 7, "Lipitor"), G(9, 29, "Tylenol with Codeine", MedField.NAME),
            G(31, 36, "40 mg", MedField.DOSAGE)]
    pred = [P(g.span.begin, g.span.end, g.text, g.field) for g in gold]
    _, counts = match_document(gold, pred, mode)
    total = sum((c for c in counts.values()), ConfusionCounts())
    assert total.fp == total.fn == 0
    if mode is not MatchMode.LENIENT_TOKEN:
        assert total.tp == len(gold)


def test_tylenol_three_modes():
    gold = [G(1103, 1123, "Tylenol with Codeine")]
    pred = [P(1103, 1110, "Tylenol")]
    expected = {MatchMode.EXACT: (0, 1, 1), MatchMode.LENIENT_SPAN: (1, 0, 0),
                MatchMode.LENIENT_TOKEN: (1, 0, 2)}
    for mode, tpl in expected.items():
        _, counts = match_document(gold, pred, mode)
        assert counts[MedField.NAME].as_tuple() == tpl, mode


def test_token_mode_uses_document_text():
    text = "x" * 1103 + "Tylenol with Codeine"
    gold = [G(1103, 1123, "tylenol w/ codeine")]  # surface text differs from the note
    pred = [P(1103, 1110, "Tylenol")]
    _, counts = match_document(gold, pred, MatchMode.LENIENT_TOKEN, text)
    assert counts[MedField.NAME].as_tuple() == (1, 0, 2)


def test_token_mode_spurious_tokens():
    text = "take lasix 40 mg now"
    gold = [G(5, 10, "lasix")]
    pred = [P(0, 16, "take lasix 40 mg")]
    _, counts = match_document(gold, pred, MatchMode.LENIENT_TOKEN, text)
    assert counts[MedField.NAME].as_tuple() == (1, 3, 0)


def test_two_gold_one_pred_is_one_to_one():
    gold = [G(0, 5), G(3, 8)]
    _, counts = match_document(gold, [P(2, 6)], MatchMode.LENIENT_SPAN)
    assert counts[MedField.NAME].as_tuple() == (1, 0, 1)
    assert brute_force_tp(gold, [P(2, 6)], is_lenient_match) == 1


def test_maximum_beats_greedy():
    # greedy left-to-right would pair g0-p0 and leave g1 unmatched
    gold = [G(0, 10), G(8, 12)]
    pred = [P(5, 9), P(0, 3)]
    trace, counts = match_document(gold, pred, MatchMode.LENIENT_SPAN)
    assert counts[MedField.NAME].tp == 2
    assert not trace.unmatched_gold and not trace.unmatched_pred


def test_mixed_documents_rejected():
    with pytest.raises(ContractError):
        match_document([G(0, 1, doc="a")], [P(0, 1, doc="b")], MatchMode.EXACT)


def test_trace_records(tmp_path):
    gold = [G(0, 5, "Lasix"), G(10, 15, "40 mg", MedField.DOSAGE)]
    pred = [P(0, 5, "lasix"), P(20, 25, "daily", MedField.FREQUENCY)]
    trace, _ = match_document(gold, pred, MatchMode.EXACT)
    buf = io.StringIO()
    write_traces([trace], buf)
    rows = [json.loads(l) for l in buf.getvalue().splitlines()]
    assert [(r["field"], r["verdict"]) for r in rows] == [
        ("DOSAGE", "missed"), ("FREQUENCY", "spurious"), ("NAME", "match")]


# ---- oracle and properties --------------------------------------------------------

def test_oracle_equivalence_and_conservation():
    rng = random.Random(2024)
    for _ in range(300):
        text, gold, pred = random_doc(rng)
        for mode, pred_fn in ((MatchMode.EXACT, is_exact_match),
                              (MatchMode.LENIENT_SPAN, is_lenient_match)):
            trace, counts = match_document(gold, pred, mode, text)
            for f in FIELDS:
                gs = [g for g in gold if g.field is f]
                ps = [p for p in pred if p.field is f]
                c = counts.get(f, ConfusionCounts())
                assert c.tp == brute_force_tp(gs, ps, pred_fn)
                assert c.tp + c.fn == len(gs) and c.tp + c.fp == len(ps)
            assert len({id(g) for g, _ in trace.pairs}) == len(trace.pairs)
            assert len({id(p) for _, p in trace.pairs}) == len(trace.pairs)
            assert all(pred_fn(g, p) for g, p in trace.pairs)


def test_matches_networkx():
    rng = random.Random(11)
    for _ in range(100):
        _, gold, pred = random_doc(rng)
        graph = nx.Graph()
        graph.add_nodes_from(("g", i) for i in range(len(gold)))
        graph.add_nodes_from(("p", j) for j in range(len(pred)))
        graph.add_edges_from((("g", i), ("p", j)) for i, g in enumerate(gold)
                             for j, p in enumerate(pred) if is_lenient_match(g, p))
        top = [n for n in graph if n[0] == "g"]
        expected = len(nx.bipartite.maximum_matching(graph, top_nodes=top)) // 2
        assert len(maximum_matching(gold, pred, is_lenient_match)) == expected


def test_dominance_and_order_independence():
    rng = random.Random(5)
    for _ in range(200):
        text, gold, pred = random_doc(rng)
        _, exact = match_document(gold, pred, MatchMode.EXACT, text)
        _, lenient = match_document(gold, pred, MatchMode.LENIENT_SPAN, text)
        for f in exact:
            assert lenient[f].tp >= exact[f].tp
        for mode in MatchMode:
            _, base = match_document(gold, pred, mode, text)
            g2, p2 = gold[:], pred[:]
            rng.shuffle(g2)
            rng.shuffle(p2)
            _, shuffled = match_document(g2, p2, mode, text)
            assert shuffled == base


def test_deterministic_pairs():
    # the second gold's augmenting path moves the first gold onto (4,6)
    gold = [G(0, 10), G(2, 12)]
    pred = [P(1, 3), P(4, 6)]
    first, _ = match_document(gold, pred, MatchMode.LENIENT_SPAN)
    second, _ = match_document(gold[::-1], pred[::-1], MatchMode.LENIENT_SPAN)
    assert [(g.span, p.span) for g, p in first.pairs] == \
        [(g.span, p.span) for g, p in second.pairs] == \
        [(CharSpan(0, 10), CharSpan(4, 6)), (CharSpan(2, 12), CharSpan(1, 3))]


def test_large_document_no_recursion_limit():
    # a chain of 3000 overlapping spans forces long augmenting paths
    gold = [G(i, i + 2) for i in range(0, 6000, 2)]
    pred = [P(i + 1, i + 3) for i in range(0, 6000, 2)] + [P(0, 1)]
    _, counts = match_document(gold, pred, MatchMode.LENIENT_SPAN)
    assert counts[MedField.NAME].tp == 3000
