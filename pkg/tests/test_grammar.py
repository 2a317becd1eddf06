import pytest
from hypothesis import given, strategies as st

from stage.compose import REGISTRY
from stage.grammar import (
    MARKER_CLASSES, NONTERMINALS, GrammarError, load_grammar, number_value, parse_grammar,
    tokenize, validate_grammar,
)

GRAMMAR = load_grammar()


def test_shipped_grammar_validates():
    assert validate_grammar(GRAMMAR, REGISTRY) == []


def test_rules_are_binary_or_lexical():
    for rule in GRAMMAR.rules:
        assert len(rule.rhs) in (1, 2)
        assert rule.lhs in NONTERMINALS


def test_tokenize_walkthrough():
    tokens = tokenize("three days ago", GRAMMAR)
    assert [t.surface for t in tokens] == ["three", "days", "ago"]
    assert tokens[0].lexical_classes == {"Num"}
    assert "Unit" in tokens[1].lexical_classes
    assert tokens[2].lexical_classes == {"AgoMarker"}


def test_spans_index_the_input():
    text = "Shares fell, briefly, within two weeks."
    for tok in tokenize(text, GRAMMAR):
        assert text[tok.span[0]:tok.span[1]] == tok.surface


def test_unknown_words_have_no_class():
    tokens = tokenize("the merger happened", GRAMMAR)
    assert [t.known for t in tokens] == [True, False, False]


def test_bigram_merge():
    tokens = tokenize("later in the week", GRAMMAR)
    assert tokens[0].surface == "later in"
    assert "ModLaterIn" in tokens[0].lexical_classes
    # only across plain whitespace
    assert tokenize("later, in", GRAMMAR)[0].surface == "later"


def test_date_literals_and_numbers():
    assert tokenize("4/5/2001", GRAMMAR)[0].lexical_classes == {"DateLit"}
    assert tokenize("2001-04-05", GRAMMAR)[0].lexical_classes == {"DateLit"}
    assert {"Num", "YearNum"} <= tokenize("1999", GRAMMAR)[0].lexical_classes
    assert number_value("twenty-one") == 21
    assert number_value("3rd") == 3
    assert number_value("banana") is None


@given(st.lists(st.sampled_from(sorted(w for w in GRAMMAR.lexicon if " " not in w)), min_size=1, max_size=6))
def test_lexicon_words_always_known(words):
    for tok in tokenize(" ".join(words), GRAMMAR):
        assert tok.known


def test_marker_classes_are_function_words():
    assert "FuncIn" in MARKER_CLASSES and "AgoMarker" in MARKER_CLASSES
    assert "Num" not in MARKER_CLASSES


@pytest.mark.parametrize("text", [
    "Length -> Num",  # no tag
    "lex : Unit",
    "nonsense line",
])
def test_malformed_grammar_lines(text):
    with pytest.raises(GrammarError):
        parse_grammar("version 1\n" + text)


def test_validation_reports_problems():
    bad = parse_grammar("version 1\nLength -> Num Unit @no_such_tag\nlex day : Unit\n")
    problems = validate_grammar(bad, REGISTRY)
    assert any("no_such_tag" in p for p in problems)
    ternary = parse_grammar("version 1\nLength -> Num Unit Unit @num_unit_to_length\n")
    assert any("1 or 2 symbols" in p for p in validate_grammar(ternary, REGISTRY))


def test_grammar_override_from_environment(tmp_path, monkeypatch):
    path = tmp_path / "tiny.txt"
    path.write_text("version 1\nLength -> Num Unit @num_unit_to_length\nlex day : Unit\n"
                    "lex days : Unit\n", encoding="utf-8")
    monkeypatch.setenv("STAGE_GRAMMAR", str(path))
    grammar = load_grammar()
    assert grammar.source == str(path)
    assert len(grammar.rules) == 1
