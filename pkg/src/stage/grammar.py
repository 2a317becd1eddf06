"""Temporal vocabulary, tokenizer and the binary grammar.

The grammar lives in a line-oriented text file (``data/grammar.txt`` by
default, or ``$STAGE_GRAMMAR``)::

    Instant -> Length AgoMarker @length_ago_to_instant
    Range -> MonthName @month_to_range
    lex ago : AgoMarker
"""
from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional

COMPLETE_TYPES = ("Instant", "Interval", "Range")
ROOT_TYPES = COMPLETE_TYPES + ("Length",)

# categories whose words carry no semantic value of their own
MARKER_CLASSES = frozenset({
    "FuncIn", "FuncOn", "FuncAt", "FuncFor", "FuncFrom", "FuncTo", "FuncUntil",
    "FuncSince", "FuncBy", "FuncWithin", "FuncBefore", "FuncAfter", "FuncDuring",
    "ModNext", "ModLast", "ModThis", "ModSometime", "ModLaterIn", "AgoMarker", "Det",
})

NONTERMINALS = frozenset({
    "Num", "Unit", "Length", "Instant", "Interval", "Range", "MonthName",
    "WeekdayName", "YearNum", "DateLit", "Deictic", "QuarterName",
    "MonthDay", "FromPart", "ToPart",
}) | MARKER_CLASSES

# classes assigned by the tokenizer itself rather than lex entries
BUILTIN_CLASSES = frozenset({"Num", "YearNum", "DateLit"})

DETERMINERS = frozenset({"the", "a", "an"})


@dataclass(frozen=True)
class Token:
    surface: str
    span: tuple[int, int]
    lexical_classes: frozenset = frozenset()

    @property
    def known(self) -> bool:
        return bool(self.lexical_classes)


@dataclass(frozen=True)
class GrammarRule:
    id: int
    lhs: str
    rhs: tuple[str, ...]
    tag: str

    @property
    def is_lexical(self) -> bool:
        return len(self.rhs) == 1

    def __str__(self):
        return f"{self.lhs} -> {' '.join(self.rhs)} @{self.tag}"


@dataclass(frozen=True)
class Grammar:
    rules: tuple[GrammarRule, ...]
    lexicon: dict = field(hash=False)  # surface (case-folded) -> frozenset of classes
    version: str = "1"
    source: str = "<builtin>"

    @cached_property
    def multiword(self) -> frozenset:
        return frozenset(s for s in self.lexicon if " " in s)

    @cached_property
    def binary_index(self) -> dict:
        index: dict = {}
        for rule in self.rules:
            if len(rule.rhs) == 2:
                index.setdefault(rule.rhs, []).append(rule)
        return index

    @cached_property
    def lexical_index(self) -> dict:
        index: dict = {}
        for rule in self.rules:
            if rule.is_lexical:
                index.setdefault(rule.rhs[0], []).append(rule)
        return index

    def words_of(self, classes: Iterable[str]) -> frozenset:
        """Single words whose lexicon entries fall in ``classes``."""
        wanted = set(classes)
        words = set()
        for surface, cls in self.lexicon.items():
            if cls & wanted:
                words.update(surface.split())
        return frozenset(words)


class GrammarError(ValueError):
    pass


_RULE = re.compile(r"^(\w+)\s*->\s*(.+?)\s*@(\w+)$")
_LEX = re.compile(r"^lex\s+(.+?)\s*:\s*(\w+)$")


def parse_grammar(text: str, source: str = "<string>") -> Grammar:
    rules, lexicon, version = [], {}, "1"
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("version "):
            version = line.split(None, 1)[1]
            continue
        if m := _LEX.match(line):
            surface = " ".join(m.group(1).casefold().split())
            lexicon[surface] = lexicon.get(surface, frozenset()) | {m.group(2)}
            continue
        if m := _RULE.match(line):
            rules.append(GrammarRule(len(rules), m.group(1), tuple(m.group(2).split()), m.group(3)))
            continue
        raise GrammarError(f"{source}:{lineno}: cannot parse {raw!r}")
    return Grammar(tuple(rules), lexicon, version, source)


def default_grammar_path() -> Optional[str]:
    return os.environ.get("STAGE_GRAMMAR") or None


def load_grammar(path: Optional[str] = None) -> Grammar:
    """Load a grammar file; ``None`` means ``$STAGE_GRAMMAR`` or the bundled grammar."""
    return _load_grammar(path or default_grammar_path())


@lru_cache(maxsize=8)
def _load_grammar(path: Optional[str]) -> Grammar:
    if path is None:
        text = resources.files("stage").joinpath("data/grammar.txt").read_text("utf-8")
        return parse_grammar(text, "<builtin>")
    return parse_grammar(Path(path).read_text("utf-8"), str(path))


def rules(grammar: Optional[Grammar] = None) -> frozenset:
    return frozenset((grammar or load_grammar()).rules)


def validate_grammar(grammar: Optional[Grammar] = None, registry: Optional[dict] = None) -> list[str]:
    """Diagnostics for arity, unregistered tags, unknown and unreachable categories."""
    grammar = grammar or load_grammar()
    if registry is None:
        from stage.compose import REGISTRY as registry
    problems = []
    for rule in grammar.rules:
        if len(rule.rhs) not in (1, 2):
            problems.append(f"rule {rule.id} ({rule}): rhs must have 1 or 2 symbols")
            continue
        unknown = [s for s in (rule.lhs, *rule.rhs) if s not in NONTERMINALS]
        if unknown:
            problems.append(f"rule {rule.id} ({rule}): unknown categories {unknown}")
            continue
        if rule.tag not in registry:
            problems.append(f"rule {rule.id} ({rule}): unregistered tag {rule.tag!r}")
            continue
        content = [s for s in rule.rhs if s not in MARKER_CLASSES]
        if registry[rule.tag].arity != len(content):
            problems.append(f"rule {rule.id} ({rule}): tag {rule.tag!r} takes "
                            f"{registry[rule.tag].arity} values, rule supplies {len(content)}")
    for surface, classes in grammar.lexicon.items():
        for cls in classes - NONTERMINALS:
            problems.append(f"lex {surface!r}: unknown class {cls}")
        if len(surface.split()) > 2:
            problems.append(f"lex {surface!r}: only one- and two-word entries are supported")

    reachable = set(ROOT_TYPES)
    frontier = list(ROOT_TYPES)
    while frontier:
        lhs = frontier.pop()
        for rule in grammar.rules:
            if rule.lhs == lhs:
                for sym in rule.rhs:
                    if sym not in reachable:
                        reachable.add(sym)
                        frontier.append(sym)
    for cat in sorted(NONTERMINALS - reachable):
        problems.append(f"category {cat} is unreachable")
    return problems


# -- tokenizer -------------------------------------------------------------

_TOKEN = re.compile(
    r"\d{1,4}[/.-]\d{1,2}[/.-]\d{1,4}"      # date literal
    r"|\d+(?:\.\d+)?(?:st|nd|rd|th)?"        # numbers and ordinals
    r"|[^\W\d_]+(?:-[^\W\d_]+)*",            # words, hyphenated compounds
    re.IGNORECASE,
)

_ONES = ["zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine",
         "ten", "eleven", "twelve", "thirteen", "fourteen", "fifteen", "sixteen",
         "seventeen", "eighteen", "nineteen"]
_TENS = ["", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety"]


def _number_words() -> dict:
    words = {w: i for i, w in enumerate(_ONES) if i}
    for t in range(2, 10):
        words[_TENS[t]] = t * 10
        for u in range(1, 10):
            words[f"{_TENS[t]}-{_ONES[u]}"] = t * 10 + u
    return words


NUMBER_WORDS = _number_words()
_ORDINAL = re.compile(r"^(\d+)(st|nd|rd|th)$", re.IGNORECASE)
_DATE = re.compile(r"^(\d{1,4})([/.-])(\d{1,2})\2(\d{1,4})$")


def number_value(surface: str):
    """Numeric value of a numeral token, or ``None``."""
    from fractions import Fraction
    word = surface.casefold()
    if word in NUMBER_WORDS:
        return NUMBER_WORDS[word]
    if word in ("a", "an"):
        return 1
    if m := _ORDINAL.match(word):
        return int(m.group(1))
    if re.fullmatch(r"\d+(?:\.\d+)?", word):
        return Fraction(word)
    return None


def _builtin_classes(surface: str) -> set:
    classes = set()
    if _DATE.match(surface):
        classes.add("DateLit")
    elif number_value(surface) is not None:
        classes.add("Num")
        if re.fullmatch(r"\d{4}", surface) and 1900 <= int(surface) <= 2099:
            classes.add("YearNum")
    return classes


def tokenize(text: str, grammar: Optional[Grammar] = None) -> list[Token]:
    """Split ``text`` into tokens, merging lexicon bigrams such as "later in".

    Punctuation and whitespace are separators; every token's span indexes
    the original string.
    """
    grammar = grammar or load_grammar()
    raw = [(m.group(), m.span()) for m in _TOKEN.finditer(text)]
    bigrams = grammar.multiword
    tokens, i = [], 0
    while i < len(raw):
        surface, (start, end) = raw[i]
        if i + 1 < len(raw):
            nxt, (nstart, nend) = raw[i + 1]
            gap = text[end:nstart]
            pair = f"{surface.casefold()} {nxt.casefold()}"
            if pair in bigrams and gap.isspace():
                tokens.append(Token(text[start:nend], (start, nend), grammar.lexicon[pair]))
                i += 2
                continue
        classes = set(grammar.lexicon.get(surface.casefold(), ())) | _builtin_classes(surface)
        tokens.append(Token(surface, (start, end), frozenset(classes)))
        i += 1
    return tokens
