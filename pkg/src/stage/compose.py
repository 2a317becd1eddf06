"""Bottom-up semantic composition over a selected parse tree.

Each grammar rule names a composition function by tag.  Function-word
children (prepositions, modifiers, "ago", determiners) select the rule but
contribute no value, so ``apply_rule`` receives only content values.
"""
from __future__ import annotations

import calendar
from dataclasses import dataclass
from datetime import datetime
from fractions import Fraction
from typing import Any, Callable, Optional

from stage.chart import ParseTree
from stage.grammar import _DATE, MARKER_CLASSES, number_value
from stage.timecore import (
    PRESENT, UNKNOWN, BareLength, ExplicitDate, Instant, Interval, Length, PresentUnit,
    Range, Relative, TimeExpression, UnitKind, Weekday, YearlessDate, length_from,
)


class SemanticError(ValueError):
    """A grammatical cue whose meaning is invalid (e.g. "February 30")."""


class GrammarBindingError(LookupError):
    """A tree names a composition tag that is not registered."""


@dataclass(frozen=True)
class RuleFn:
    tag: str
    arity: int
    produces: str
    fn: Callable


REGISTRY: dict[str, RuleFn] = {}


def rule(tag: str, produces: str, arity: int):
    def wrap(fn):
        REGISTRY[tag] = RuleFn(tag, arity, produces, fn)
        return fn
    return wrap


# -- lexical values --------------------------------------------------------

_UNITS = {
    "second": UnitKind.SECOND, "sec": UnitKind.SECOND,
    "minute": UnitKind.MINUTE, "min": UnitKind.MINUTE,
    "hour": UnitKind.HOUR, "hr": UnitKind.HOUR,
    "day": UnitKind.DAY, "week": UnitKind.WEEK, "month": UnitKind.MONTH,
    "quarter": UnitKind.QUARTER, "year": UnitKind.YEAR, "yr": UnitKind.YEAR,
    "decade": UnitKind.DECADE,
}
_MONTHS = {name.casefold(): i for i, name in enumerate(calendar.month_name) if name}
_MONTHS.update({name.casefold(): i for i, name in enumerate(calendar.month_abbr) if name})
_MONTHS["sept"] = 9
_WEEKDAYS = {name.casefold(): i for i, name in enumerate(calendar.day_name)}
_ORDINAL_WORDS = {"first": 1, "second": 2, "third": 3, "fourth": 4,
                  "1st": 1, "2nd": 2, "3rd": 3, "4th": 4}
_DEICTIC_OFFSET = {"now": 0, "today": 0, "yesterday": -24, "tomorrow": 24}


def unit_of(word: str) -> UnitKind:
    word = word.casefold()
    if word in _UNITS:
        return _UNITS[word]
    if word.endswith("s") and word[:-1] in _UNITS:
        return _UNITS[word[:-1]]
    raise SemanticError(f"not a unit: {word!r}")


def expand_year(year: int) -> int:
    """Two-digit years pivot at 50: 00-50 -> 2000-2050, 51-99 -> 1951-1999."""
    if year >= 100:
        return year
    return 2000 + year if year <= 50 else 1900 + year


def parse_date_literal(text: str) -> datetime:
    m = _DATE.match(text)
    if not m:
        raise SemanticError(f"not a date literal: {text!r}")
    a, sep, b, c = m.groups()
    try:
        if len(a) == 4:  # ISO order
            return datetime(int(a), int(b), int(c))
        return datetime(expand_year(int(c)), int(a), int(b))  # US month/day/year
    except ValueError as exc:
        raise SemanticError(f"invalid date {text!r}: {exc}") from None


def lexical_value(cls: str, surface: str) -> Any:
    word = surface.casefold()
    if cls in MARKER_CLASSES:
        return None
    if cls == "Num":
        return Fraction(number_value(word))
    if cls == "Unit":
        return unit_of(word)
    if cls == "MonthName":
        return _MONTHS[word]
    if cls == "WeekdayName":
        return _WEEKDAYS[word]
    if cls == "YearNum":
        return int(word)
    if cls == "DateLit":
        return parse_date_literal(surface)
    if cls == "Deictic":
        return word
    if cls == "QuarterName":
        return _ORDINAL_WORDS[word.split()[0]]
    raise GrammarBindingError(f"no lexical semantics for class {cls}")


# -- composition rules -----------------------------------------------------

def _present(offset=0, dist: Optional[Length] = None) -> Relative:
    return Relative(PRESENT, offset, dist)


def _date(year: int, month: int, day: int = 1) -> Relative:
    try:
        return Relative(ExplicitDate(datetime(year, month, day)))
    except ValueError as exc:
        raise SemanticError(str(exc)) from None


def _next_month(year: int, month: int) -> tuple[int, int]:
    return (year + 1, 1) if month == 12 else (year, month + 1)


@rule("num_unit_to_length", "Length", 2)
def num_unit_to_length(num, unit):
    return length_from(num, unit)


@rule("length_ago_to_instant", "Instant", 1)
def length_ago_to_instant(length):
    return Instant(_present(-length.hours, length))


@rule("in_length_to_instant", "Instant", 1)
def in_length_to_instant(length):
    return Instant(_present(length.hours, length))


@rule("same_instant", "Instant", 1)
def same_instant(instant):
    return instant


@rule("month_day", "MonthDay", 2)
def month_day(month, day):
    if day.denominator != 1 or not 1 <= day <= calendar.monthrange(2000, month)[1]:
        raise SemanticError(f"no day {day} in month {month}")
    return (month, int(day))


@rule("month_day_to_instant", "Instant", 2)
def month_day_to_instant(month, day):
    month, day = month_day(month, day)
    return Instant(Relative(YearlessDate(month, day)))


@rule("month_day_year_to_instant", "Instant", 2)
def month_day_year_to_instant(md, year):
    return Instant(_date(year, *md))


@rule("date_to_instant", "Instant", 1)
def date_to_instant(when):
    return Instant(Relative(ExplicitDate(when)))


@rule("weekday_to_instant", "Instant", 1)
def weekday_to_instant(weekday):
    return Instant(Relative(Weekday(weekday)))


@rule("deictic_to_instant", "Instant", 1)
def deictic_to_instant(word):
    offset = _DEICTIC_OFFSET[word]
    return Instant(_present(offset, length_from(1, UnitKind.DAY) if offset else None))


_FIXED_UNITS = {UnitKind.SECOND, UnitKind.MINUTE, UnitKind.HOUR, UnitKind.DAY, UnitKind.WEEK}


@rule("for_length_to_interval", "Interval", 1)
def for_length_to_interval(length):
    return Interval(UNKNOWN, UNKNOWN, length)


@rule("for_range_to_interval", "Interval", 1)
def for_range_to_interval(rng):
    # the event fills the whole range; its length is only stated for fixed-size units
    span = rng.span_length
    length = span if span is not None and span.unit in _FIXED_UNITS else None
    return Interval(rng.lower, rng.upper, length)


@rule("before_instant_to_interval", "Interval", 1)
def before_instant_to_interval(instant):
    return Interval(UNKNOWN, instant.position, None)


@rule("after_instant_to_interval", "Interval", 1)
def after_instant_to_interval(instant):
    return Interval(instant.position, UNKNOWN, None)


@rule("since_instant_to_interval", "Interval", 1)
def since_instant_to_interval(instant):
    return Interval(instant.position, _present(), None)


@rule("since_range_to_interval", "Interval", 1)
def since_range_to_interval(rng):
    return Interval(rng.lower, _present(), None)


@rule("from_instant", "FromPart", 1)
def from_instant(instant):
    return instant.position


@rule("from_range", "FromPart", 1)
def from_range(rng):
    return rng.lower


@rule("to_instant", "ToPart", 1)
def to_instant(instant):
    return instant.position


@rule("to_range", "ToPart", 1)
def to_range(rng):
    return rng.upper


@rule("from_to_interval", "Interval", 2)
def from_to_interval(start, end):
    return Interval(start, end, None)


@rule("within_length_to_range", "Range", 1)
def within_length_to_range(length):
    return Range(_present(), _present(length.hours, length), length, None)


@rule("same_range", "Range", 1)
def same_range(rng):
    return rng


@rule("later_in_range", "Range", 1)
def later_in_range(rng):
    return Range(_present(), rng.upper, None, rng.inner_length)


@rule("by_instant_to_range", "Range", 1)
def by_instant_to_range(instant):
    return Range(UNKNOWN, instant.position, None, None)


def _unit_range(unit: UnitKind, shift: int) -> Range:
    return Range(Relative(PresentUnit(unit, shift)), Relative(PresentUnit(unit, shift + 1)),
                 length_from(1, unit), None)


@rule("next_unit_range", "Range", 1)
def next_unit_range(unit):
    return _unit_range(unit, 1)


@rule("last_unit_range", "Range", 1)
def last_unit_range(unit):
    return _unit_range(unit, -1)


@rule("this_unit_range", "Range", 1)
def this_unit_range(unit):
    return _unit_range(unit, 0)


@rule("month_year_to_range", "Range", 2)
def month_year_to_range(month, year):
    return Range(_date(year, month), _date(*_next_month(year, month)), length_from(1, UnitKind.MONTH))


@rule("month_to_range", "Range", 1)
def month_to_range(month):
    return Range(Relative(YearlessDate(month)), Relative(YearlessDate(month, edge="end")),
                 length_from(1, UnitKind.MONTH))


@rule("year_to_range", "Range", 1)
def year_to_range(year):
    return Range(_date(year, 1), _date(year + 1, 1), length_from(1, UnitKind.YEAR))


@rule("quarter_to_range", "Range", 1)
def quarter_to_range(quarter):
    first, last = 3 * quarter - 2, 3 * quarter
    return Range(Relative(YearlessDate(first, last_month=last)),
                 Relative(YearlessDate(first, last_month=last, edge="end")),
                 length_from(1, UnitKind.QUARTER))


# -- driver ----------------------------------------------------------------

def apply_rule(tag: str, children) -> Any:
    """Apply the composition function ``tag`` to content child values."""
    try:
        entry = REGISTRY[tag]
    except KeyError:
        raise GrammarBindingError(f"unregistered semantic tag {tag!r}") from None
    if len(children) != entry.arity:
        raise ValueError(f"{tag} takes {entry.arity} values, got {len(children)}")
    return entry.fn(*children)


def compose_value(tree: ParseTree, trace: Optional[list] = None) -> Any:
    """Semantic value of any subtree; ``trace`` collects the tags applied, in order."""
    if tree.is_leaf:
        return lexical_value(tree.label, tree.surface)
    if tree.rule.is_lexical:
        leaf = tree.children[0]
        values = [lexical_value(leaf.label, leaf.surface)]
    else:
        values = [compose_value(c, trace) for c in tree.children if c.label not in MARKER_CLASSES]
    if trace is not None:
        trace.append(tree.rule.tag)
    return apply_rule(tree.rule.tag, values)


def compose(tree: ParseTree, trace: Optional[list] = None) -> TimeExpression:
    """Time expression for a tree rooted in a complete type or Length."""
    value = compose_value(tree, trace)
    if isinstance(value, Length):
        return BareLength(value)
    if isinstance(value, (Instant, Interval, Range)):
        return value
    raise ValueError(f"a {tree.label} tree does not denote a time expression")
