from functools import lru_cache

import pytest
from hypothesis import given, settings, strategies as st

from stage.chart import enumerate_trees, parse_all, select_all_maximal, select_length, select_tree
from stage.grammar import load_grammar, tokenize

GRAMMAR = load_grammar()


def chart_of(text):
    return parse_all(tokenize(text, GRAMMAR), GRAMMAR)


def recognizer(tokens, grammar):
    """Top-down memoised derivability check, written independently of the CKY fill."""
    binary = [r for r in grammar.rules if len(r.rhs) == 2]
    lexical = [r for r in grammar.rules if len(r.rhs) == 1]

    @lru_cache(maxsize=None)
    def labels(i, j):
        if j - i == 1:
            classes = set(tokens[i].lexical_classes)
            return frozenset(classes | {r.lhs for r in lexical if r.rhs[0] in classes})
        out = set()
        for r in binary:
            for k in range(i + 1, j):
                if r.rhs[0] in labels(i, k) and r.rhs[1] in labels(k, j):
                    out.add(r.lhs)
                    break
        return frozenset(out)

    return labels


def check_derivation(tree, tokens):
    i, j = tree.span
    if tree.is_leaf:
        assert j - i == 1 and tree.label in tokens[i].lexical_classes
        return
    assert tree.rule.lhs == tree.label
    assert tuple(c.label for c in tree.children) == tuple(tree.rule.rhs)
    if len(tree.children) == 2:
        left, right = tree.children
        assert left.span[0] == i and left.span[1] == right.span[0] and right.span[1] == j
    for child in tree.children:
        check_derivation(child, tokens)


def test_walkthrough_chart():
    chart = chart_of("three days ago")
    assert "Instant" in chart.labels(0, 3)
    assert "Length" in chart.labels(0, 2)
    assert len(chart.cells) == 6


def test_unknown_words_give_empty_cells():
    chart = chart_of("hello world")
    assert all(not cell for cell in chart.cells.values())
    assert select_tree(chart) is None


def test_empty_input_rejected():
    with pytest.raises(ValueError):
        parse_all([], GRAMMAR)


def test_full_span_tree():
    chart = chart_of("three days ago")
    brackets = {t.bracketed() for t in enumerate_trees(chart, (0, 3), "Instant")}
    assert "(Instant (Length (Num three) (Unit days)) (AgoMarker ago))" in brackets
    assert any(t.label == "Length" for t in enumerate_trees(chart, (0, 2)))


def test_empty_cell_has_no_trees():
    chart = chart_of("three days ago")
    assert enumerate_trees(chart, (1, 3)) == []


@pytest.mark.parametrize("span", [(0, 0), (2, 1), (0, 4), (-1, 2)])
def test_out_of_range_spans(span):
    with pytest.raises(ValueError):
        enumerate_trees(chart_of("three days ago"), span)


@pytest.mark.parametrize("text, label", [
    ("three days ago", "Instant"),
    ("before three days ago", "Interval"),
    ("within four hours", "Range"),
])
def test_selection_takes_full_span(text, label):
    chart = chart_of(text)
    tree = select_tree(chart)
    assert tree.label == label and tree.span == (0, chart.n)


def test_bare_length_is_not_complete():
    chart = chart_of("four hours")
    assert select_tree(chart) is None
    assert select_length(chart).label == "Length"


def test_instant_preferred_on_same_span():
    # "December 1999" is both MonthName+Num (an Instant) and MonthName+YearNum (a Range)
    chart = chart_of("December 1999")
    assert {"Instant", "Range"} <= chart.labels(0, 2)
    assert select_tree(chart).label == "Instant"


def test_rejected_trees_fall_through_within_span():
    chart = chart_of("December 1999")
    assert select_tree(chart, lambda t: t.label != "Instant").label == "Range"
    # a narrower span never replaces the widest one
    chart = chart_of("February 30")
    assert select_tree(chart, lambda t: False) is None


def test_leftmost_span_wins_ties():
    chart = chart_of("Monday Tuesday")
    assert select_tree(chart).span == (0, 1)


def test_all_maximal_for_split_cue():
    chart = chart_of("for an hour sometime next week")
    trees = select_all_maximal(chart)
    assert [t.label for t in trees] == ["Interval", "Range"]
    assert trees[0].span[1] <= trees[1].span[0]


def test_selection_is_deterministic():
    text = "sometime later in the week"
    assert select_tree(chart_of(text)) == select_tree(chart_of(text))


WORDS = sorted(w for w in GRAMMAR.lexicon if " " not in w) + ["three", "1999", "ago", "banana"]


@settings(max_examples=60, deadline=None)
@given(st.lists(st.sampled_from(WORDS), min_size=1, max_size=6))
def test_cells_match_recognizer(words):
    tokens = tokenize(" ".join(words), GRAMMAR)
    chart = parse_all(tokens, GRAMMAR)
    oracle = recognizer(tuple(tokens), GRAMMAR)
    for (i, j) in chart.cells:
        assert chart.labels(i, j) == oracle(i, j)
    for (i, j), cell in chart.cells.items():
        for tree in enumerate_trees(chart, (i, j)):
            check_derivation(tree, tokens)
