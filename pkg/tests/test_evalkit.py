import json
import warnings

import pytest
from hypothesis import given, strategies as st

from stage.bridge import Relation
from stage.evalkit import (
    CorpusError, GoldLink, MatchVerdict, default_whitelist, extraction_report, load_minicorpus,
    ordering_metrics, read_corpus, relaxed_match, timeml_to_record,
)
from stage.pipeline import find_cues

WHITELIST = default_whitelist()
B, A = Relation.BEFORE, Relation.AFTER


@pytest.mark.parametrize("gold, system, verdict", [
    ("Monday", "the Monday", MatchVerdict.EXTENDED),
    ("December", "in December", MatchVerdict.EXTENDED),
    ("Monday", "Monday", MatchVerdict.EXACT),
    ("Monday", "Tuesday", MatchVerdict.MISS),
    ("two weeks", "within two weeks", MatchVerdict.EXTENDED),
    ("week", "next week", MatchVerdict.MISS),  # "next" changes the meaning
    ("Monday", "the", MatchVerdict.MISS),
])
def test_relaxed_match_examples(gold, system, verdict):
    assert relaxed_match(gold, system, WHITELIST) is verdict


def test_whitelist_contents():
    assert {"the", "a", "an", "in", "on", "for"} <= WHITELIST
    assert "next" not in WHITELIST and "ago" not in WHITELIST


def test_case_and_trailing_punctuation_ignored():
    assert relaxed_match("monday", "Monday.", WHITELIST) is MatchVerdict.EXACT


text = st.lists(st.sampled_from(["Monday", "the", "in", "December", "three", "days", "ago", "next"]),
                min_size=1, max_size=5).map(" ".join)


@given(text)
def test_identity(gold):
    assert relaxed_match(gold, gold, WHITELIST) is MatchVerdict.EXACT


@given(text, text)
def test_extension_keeps_gold_contiguous(gold, system):
    if relaxed_match(gold, system, WHITELIST) is MatchVerdict.EXTENDED:
        g, s = gold.casefold().split(), system.casefold().split()
        starts = [i for i in range(len(s) - len(g) + 1) if s[i:i + len(g)] == g]
        assert starts
        assert any(all(w in WHITELIST for w in s[:i] + s[i + len(g):]) for i in starts)


def test_minicorpus_report():
    corpus = load_minicorpus()
    spans = {doc.doc_id: [c.span for c in find_cues(doc.text, doc.dct)] for doc in corpus}
    report = extraction_report(corpus, spans)
    assert report.n == 20
    assert report.matched == 1.0
    assert report.extended_share >= 0.5


def test_gold_as_system_is_all_exact():
    corpus = load_minicorpus()
    report = extraction_report(corpus, {d.doc_id: list(d.timex) for d in corpus})
    assert (report.matched, report.extended_share) == (1.0, 0.0)


def test_no_system_spans_miss():
    report = extraction_report(load_minicorpus(), {})
    assert report.matched == 0.0 and report.n == 20


def prf(score):
    return score.precision, score.recall, score.f1


def test_ordering_examples():
    gold = [GoldLink("x", "y", B), GoldLink("y", "z", B)]
    assert prf(ordering_metrics({("x", "y"): B, ("y", "z"): B}, gold)) == (1.0, 1.0, 1.0)
    assert prf(ordering_metrics({("x", "y"): B, ("y", "z"): A}, gold)) == (0.5, 0.5, 0.5)
    # inverse orientation counts, and pairs outside gold are not scored
    flipped = ordering_metrics({("y", "x"): A, ("a", "b"): B}, gold)
    assert (flipped.precision, flipped.recall, flipped.predicted) == (1.0, 0.5, 1)


def test_empty_gold_warns():
    with pytest.warns(UserWarning):
        score = ordering_metrics({("x", "y"): B}, [])
    assert score.recall == 0.0


@given(st.lists(st.tuples(st.booleans(), st.booleans()), min_size=1, max_size=30))
def test_f1_is_harmonic_mean(links):
    gold, pred = [], {}
    for n, (predicted, right) in enumerate(links):
        gold.append(GoldLink(f"e{n}", f"f{n}", B))
        if predicted:
            pred[(f"e{n}", f"f{n}")] = B if right else A
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        score = ordering_metrics(pred, gold)
    if score.precision and score.recall:
        assert abs(score.f1 - 2 / (1 / score.precision + 1 / score.recall)) < 1e-9


def record(**kw):
    rec = {"doc_id": "d", "text": "It rained three days ago.", "dct": "2001-01-10",
           "events": [{"id": "rained", "span": [3, 9], "cue": [10, 24]}], "timex": [[10, 24]]}
    rec.update(kw)
    return json.dumps(rec)


def test_corpus_roundtrip():
    (doc,) = read_corpus([record(), ""])
    assert doc.cue_text(doc.events[0]) == "three days ago"


@pytest.mark.parametrize("bad", [
    "{not json",
    record(text=5),
    record(dct="someday"),
    record(timex=[[10, 99]]),
    record(events=[{"id": "x", "span": [0, 2]}, {"id": "x", "span": [3, 9]}]),
    record(tlinks=[{"source": "rained", "target": "ghost", "relation": "b"}]),
    record(tlinks=[{"source": "rained", "target": "rained", "relation": "maybe"}]),
    record(events=[{"id": "x", "span": [0, True]}]),
])
def test_corpus_errors_carry_line_numbers(bad):
    with pytest.raises(CorpusError) as info:
        list(read_corpus([record(), bad]))
    assert info.value.line == 2


def test_timeml_stub_lists_fields():
    with pytest.raises(NotImplementedError, match="dct"):
        timeml_to_record("doc.tml")
