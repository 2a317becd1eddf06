"""Exhaustive binary CKY parsing over the temporal grammar."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Iterator, Optional, Sequence

from stage.grammar import COMPLETE_TYPES, Grammar, GrammarRule, Token, load_grammar

_TYPE_PRIORITY = {"Instant": 0, "Interval": 1, "Range": 2}


@dataclass(frozen=True)
class Entry:
    """One way of building ``label`` over a cell.

    Leaves have no rule; lexical promotions have a rule and no split;
    binary entries record the split point ``k``.
    """
    label: str
    rule: Optional[GrammarRule] = None
    split: Optional[int] = None


@dataclass(frozen=True)
class ParseTree:
    label: str
    span: tuple[int, int]
    children: tuple["ParseTree", ...] = ()
    rule: Optional[GrammarRule] = None
    surface: Optional[str] = None

    @property
    def width(self) -> int:
        return self.span[1] - self.span[0]

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def rule_ids(self) -> tuple[int, ...]:
        """Rule ids in preorder; the tie-break key between equal-width trees."""
        if self.rule is None:
            return ()
        ids = [self.rule.id]
        for child in self.children:
            ids.extend(child.rule_ids())
        return tuple(ids)

    def depth(self) -> int:
        return 1 + max((c.depth() for c in self.children), default=0)

    def internal_nodes(self) -> int:
        return 0 if self.is_leaf else 1 + sum(c.internal_nodes() for c in self.children)

    def bracketed(self) -> str:
        if self.is_leaf:
            return f"({self.label} {self.surface})"
        return f"({self.label} {' '.join(c.bracketed() for c in self.children)})"

    __str__ = bracketed


@dataclass
class Chart:
    tokens: tuple[Token, ...]
    cells: dict = field(default_factory=dict)  # (i, j) -> {label: [Entry, ...]}

    @property
    def n(self) -> int:
        return len(self.tokens)

    def cell(self, i: int, j: int) -> dict:
        return self.cells[(i, j)]

    def labels(self, i: int, j: int) -> set:
        return set(self.cells[(i, j)])


def parse_all(tokens: Sequence[Token], grammar: Optional[Grammar] = None) -> Chart:
    """Fill every cell of the CKY chart.  O(n^3 * |rules|)."""
    if not tokens:
        raise ValueError("cannot parse an empty token sequence")
    grammar = grammar or load_grammar()
    binary, lexical = _indexes(grammar)
    chart = Chart(tuple(tokens))
    n = len(tokens)
    for i, tok in enumerate(tokens):
        cell: dict = {}
        for cls in sorted(tok.lexical_classes):
            cell.setdefault(cls, []).append(Entry(cls))
            for rule in lexical.get(cls, ()):
                _add(cell, Entry(rule.lhs, rule))
        chart.cells[(i, i + 1)] = cell
    for width in range(2, n + 1):
        for i in range(0, n - width + 1):
            j = i + width
            cell = {}
            for k in range(i + 1, j):
                left, right = chart.cells[(i, k)], chart.cells[(k, j)]
                if not left or not right:
                    continue
                for a in left:
                    for b in right:
                        for rule in binary.get((a, b), ()):
                            _add(cell, Entry(rule.lhs, rule, k))
            chart.cells[(i, j)] = cell
    return chart


def _indexes(grammar: Grammar):
    return grammar.binary_index, grammar.lexical_index


def _add(cell: dict, entry: Entry) -> None:
    entries = cell.setdefault(entry.label, [])
    if entry not in entries:
        entries.append(entry)


def _check_span(chart: Chart, span: tuple[int, int]) -> None:
    i, j = span
    if not (0 <= i < j <= chart.n):
        raise ValueError(f"span {span} outside chart of {chart.n} tokens")


def _trees(chart: Chart, i: int, j: int, label: str) -> Iterator[ParseTree]:
    for entry in chart.cells[(i, j)].get(label, ()):
        if entry.rule is None:
            yield ParseTree(label, (i, j), surface=chart.tokens[i].surface)
        elif entry.split is None:
            leaf = ParseTree(entry.rule.rhs[0], (i, j), surface=chart.tokens[i].surface)
            yield ParseTree(label, (i, j), (leaf,), entry.rule)
        else:
            k = entry.split
            a, b = entry.rule.rhs
            for left, right in product(list(_trees(chart, i, k, a)), list(_trees(chart, k, j, b))):
                yield ParseTree(label, (i, j), (left, right), entry.rule)


def enumerate_trees(chart: Chart, span: tuple[int, int], label: Optional[str] = None) -> list[ParseTree]:
    """All distinct derivations over ``span`` (optionally only those rooted in ``label``)."""
    _check_span(chart, span)
    i, j = span
    labels = [label] if label is not None else sorted(chart.cells[(i, j)])
    trees = []
    for lab in labels:
        trees.extend(_trees(chart, i, j, lab))
    return trees


def _best(chart: Chart, span: tuple[int, int],
          accept: Optional[Callable[[ParseTree], bool]] = None) -> Optional[ParseTree]:
    candidates = [t for lab in COMPLETE_TYPES for t in enumerate_trees(chart, span, lab)]
    candidates.sort(key=lambda t: (_TYPE_PRIORITY[t.label], t.rule_ids()))
    for tree in candidates:
        if accept is None or accept(tree):
            return tree
    return None


def _complete_spans(chart: Chart) -> list[tuple[int, int]]:
    spans = [s for s, cell in chart.cells.items() if any(lab in cell for lab in COMPLETE_TYPES)]
    # widest first, then leftmost
    return sorted(spans, key=lambda s: (-(s[1] - s[0]), s[0]))


def select_tree(chart: Chart, accept: Optional[Callable[[ParseTree], bool]] = None) -> Optional[ParseTree]:
    """The complete-type tree over the widest span.

    Ties: leftmost span, then Instant > Interval > Range, then the
    lexicographically lowest preorder sequence of rule ids.  Trees that
    ``accept`` rejects are passed over, but a narrower span never stands in
    for a wider one.
    """
    spans = _complete_spans(chart)
    return _best(chart, spans[0], accept) if spans else None


def select_all_maximal(chart: Chart, accept: Optional[Callable[[ParseTree], bool]] = None) -> list[ParseTree]:
    """Best tree for every complete-type span not nested inside another one, left to right."""
    maximal: list[tuple[int, int]] = []
    for span in _complete_spans(chart):
        if not any(o[0] <= span[0] and span[1] <= o[1] for o in maximal):
            maximal.append(span)
    trees = (_best(chart, span, accept) for span in sorted(maximal))
    return [t for t in trees if t is not None]


def select_length(chart: Chart) -> Optional[ParseTree]:
    """Widest bare Length tree, for cues that never reach a complete type."""
    spans = sorted((s for s, cell in chart.cells.items() if "Length" in cell),
                   key=lambda s: (-(s[1] - s[0]), s[0]))
    if not spans:
        return None
    return min(enumerate_trees(chart, spans[0], "Length"), key=ParseTree.rule_ids)
