"""End-to-end extraction: cue text in, normalized expressions out."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from stage.bridge import merge_expressions
from stage.chart import ParseTree, parse_all, select_all_maximal, select_length, select_tree
from stage.compose import SemanticError, compose
from stage.grammar import Grammar, Token, load_grammar, tokenize
from stage.normalize import DateLike, parse_dct, resolve
from stage.timecore import TimeExpression


@dataclass(frozen=True)
class Extraction:
    text: str
    span: tuple[int, int]  # character offsets into the input
    tree: ParseTree
    expression: TimeExpression  # as composed, anchors unresolved
    resolved: TimeExpression

    @property
    def surface(self) -> str:
        return self.text[self.span[0]:self.span[1]]


def _char_span(tokens: list[Token], tree: ParseTree, base: int = 0) -> tuple[int, int]:
    i, j = tree.span
    return tokens[base + i].span[0], tokens[base + j - 1].span[1]


def _meaningful(tree: ParseTree) -> bool:
    try:
        compose(tree)
    except SemanticError:
        return False
    return True


def _composed(trees):
    return [(tree, compose(tree)) for tree in trees]


def extract(text: str, dct: Optional[DateLike] = None,
            grammar: Optional[Grammar] = None, merge: bool = True) -> Optional[Extraction]:
    """Interpret a whole cue.

    The widest complete-type tree wins; disjoint complete sub-cues ("for an
    hour sometime next week") are merged when ``merge`` is set.  A cue that
    only reaches a Length yields a ``BareLength``.
    """
    grammar = grammar or load_grammar()
    dct = parse_dct(dct)
    tokens = tokenize(text, grammar)
    if not tokens:
        return None
    chart = parse_all(tokens, grammar)
    best = select_tree(chart, _meaningful)
    if best is None:
        length = select_length(chart)
        if length is None:
            return None
        expr = compose(length)
        return Extraction(text, _char_span(tokens, length), length, expr, resolve(expr, dct))
    parts = _composed(select_all_maximal(chart, _meaningful)) if merge else []
    tree, expr = best, compose(best)
    span = _char_span(tokens, tree)
    if len(parts) > 1:
        merged = merge_expressions([e for _, e in parts])
        if merged is not None and merged != parts[0][1]:
            expr = merged
            span = (_char_span(tokens, parts[0][0])[0], _char_span(tokens, parts[-1][0])[1])
    return Extraction(text, span, tree, expr, resolve(expr, dct))


def find_cues(text: str, dct: Optional[DateLike] = None,
              grammar: Optional[Grammar] = None) -> list[Extraction]:
    """All maximal time cues in running text, left to right.

    Words outside the vocabulary cannot sit inside a derivation, so the
    chart is built only over runs of known tokens.
    """
    grammar = grammar or load_grammar()
    dct = parse_dct(dct)
    tokens = tokenize(text, grammar)
    found = []
    start = 0
    while start < len(tokens):
        if not tokens[start].known:
            start += 1
            continue
        end = start
        while end < len(tokens) and tokens[end].known:
            end += 1
        run = tokens[start:end]
        chart = parse_all(run, grammar)
        for tree, expr in _composed(select_all_maximal(chart, _meaningful)):
            span = _char_span(tokens, tree, start)
            found.append(Extraction(text, span, tree, expr, resolve(expr, dct)))
        start = end
    return found
