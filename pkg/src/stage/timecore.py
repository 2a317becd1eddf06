"""Semantic objects of the temporal framework.

Every position on the timeline is an exact ``Fraction`` of hours.  Points
are either absolute (``Known``), tied to an anchor that still needs a
document date or calendar resolution (``Relative``), or ``Unknown``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from datetime import datetime
from fractions import Fraction
from typing import Optional, Union

__all__ = [
    "UnitKind", "Length", "unit_to_hours", "length_from",
    "Present", "PRESENT", "ExplicitDate", "YearlessDate", "Weekday", "PresentUnit",
    "Known", "Relative", "Unknown", "UNKNOWN", "TimePoint",
    "Instant", "Interval", "Range", "BareLength", "TimeExpression",
    "Ordering", "IncomparableError", "compare_known", "render", "render_point",
    "EPOCH",
]

EPOCH = datetime(2000, 1, 1)


class UnitKind(enum.Enum):
    SECOND = "second"
    MINUTE = "minute"
    HOUR = "hour"
    DAY = "day"
    WEEK = "week"
    MONTH = "month"
    QUARTER = "quarter"
    YEAR = "year"
    DECADE = "decade"


# Conventional factors for bare durations; calendar-exact lengths only
# apply once an explicit date is resolved.
_HOURS = {
    UnitKind.SECOND: Fraction(1, 3600),
    UnitKind.MINUTE: Fraction(1, 60),
    UnitKind.HOUR: Fraction(1),
    UnitKind.DAY: Fraction(24),
    UnitKind.WEEK: Fraction(168),
    UnitKind.MONTH: Fraction(720),
    UnitKind.QUARTER: Fraction(2160),
    UnitKind.YEAR: Fraction(8760),
    UnitKind.DECADE: Fraction(87600),
}


def unit_to_hours(unit: UnitKind) -> Fraction:
    return _HOURS[unit]


@dataclass(frozen=True)
class Length:
    number: Fraction
    unit: UnitKind

    def __post_init__(self):
        object.__setattr__(self, "number", Fraction(self.number))
        if self.number < 0:
            raise ValueError(f"negative length: {self.number}")

    @property
    def hours(self) -> Fraction:
        return self.number * unit_to_hours(self.unit)

    def __str__(self):
        return f"Length({_num(self.number)},{self.unit.value})"


def length_from(number, unit: UnitKind) -> Length:
    """Build a ``Length``; raises ``ValueError`` for negative numbers."""
    return Length(Fraction(number), unit)


# -- anchors ---------------------------------------------------------------

@dataclass(frozen=True)
class Present:
    """The document creation time."""

    def __str__(self):
        return "present"


PRESENT = Present()


@dataclass(frozen=True)
class ExplicitDate:
    when: datetime

    def __str__(self):
        return _iso(self.when)


@dataclass(frozen=True)
class YearlessDate:
    """A calendar reference whose year is supplied by the document date.

    ``month``..``last_month`` is the covered month span; ``day`` narrows it
    to one day.  ``edge`` picks the start or the end of the span.
    """
    month: int
    day: Optional[int] = None
    last_month: Optional[int] = None
    edge: str = "start"

    def __str__(self):
        text = f"month={self.month}"
        if self.day is not None:
            text += f"/day={self.day}"
        if self.last_month is not None and self.last_month != self.month:
            text += f"-{self.last_month}"
        return text if self.edge == "start" else text + "/end"


@dataclass(frozen=True)
class Weekday:
    weekday: int  # 0 = Monday

    def __str__(self):
        return f"weekday={self.weekday}"


@dataclass(frozen=True)
class PresentUnit:
    """Start of the calendar ``unit`` containing the present, moved by ``shift`` units."""
    unit: UnitKind
    shift: int

    def __str__(self):
        return f"{self.unit.value}{self.shift:+d}"


Anchor = Union[Present, ExplicitDate, YearlessDate, Weekday, PresentUnit]


# -- points ----------------------------------------------------------------

@dataclass(frozen=True)
class Known:
    position: Fraction

    def __post_init__(self):
        object.__setattr__(self, "position", Fraction(self.position))


@dataclass(frozen=True)
class Relative:
    anchor: Anchor
    offset: Fraction = Fraction(0)
    # rendering hint only: the distance as it was written
    dist: Optional[Length] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "offset", Fraction(self.offset))


@dataclass(frozen=True)
class Unknown:
    pass


UNKNOWN = Unknown()
TimePoint = Union[Known, Relative, Unknown]


# -- expressions -----------------------------------------------------------

@dataclass(frozen=True)
class Instant:
    position: TimePoint


@dataclass(frozen=True)
class Interval:
    start: TimePoint = UNKNOWN
    end: TimePoint = UNKNOWN
    length: Optional[Length] = None

    def __post_init__(self):
        if (isinstance(self.start, Known) and isinstance(self.end, Known)
                and self.length is not None
                and self.end.position - self.start.position != self.length.hours):
            raise ValueError("interval endpoints disagree with its length")


@dataclass(frozen=True)
class Range:
    lower: TimePoint = UNKNOWN
    upper: TimePoint = UNKNOWN
    span_length: Optional[Length] = None
    inner_length: Optional[Length] = None

    def __post_init__(self):
        if (isinstance(self.lower, Known) and isinstance(self.upper, Known)
                and self.lower.position > self.upper.position):
            raise ValueError("range lower bound exceeds upper bound")


@dataclass(frozen=True)
class BareLength:
    length: Length


TimeExpression = Union[Instant, Interval, Range, BareLength]


# -- comparison ------------------------------------------------------------

class Ordering(enum.Enum):
    LESS = -1
    EQUAL = 0
    GREATER = 1


class IncomparableError(ValueError):
    pass


def compare_known(a: TimePoint, b: TimePoint) -> Ordering:
    if isinstance(a, Known) and isinstance(b, Known):
        x, y = a.position, b.position
    elif isinstance(a, Relative) and isinstance(b, Relative) and a.anchor == b.anchor:
        x, y = a.offset, b.offset
    else:
        raise IncomparableError(f"cannot compare {a!r} with {b!r}")
    return Ordering.LESS if x < y else Ordering.GREATER if x > y else Ordering.EQUAL


# -- canonical rendering ---------------------------------------------------

def _num(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _iso(when: datetime) -> str:
    text = when.strftime("%Y-%m-%dT%H:%M")
    return text + when.strftime(":%S") if when.second else text


def render_point(point: TimePoint) -> str:
    if isinstance(point, Unknown):
        return "Unknown"
    if isinstance(point, Known):
        from stage.normalize import date_at  # local: normalize imports this module
        try:
            return f"Instant({_iso(date_at(point.position))})"
        except ValueError:
            return f"Instant(at={_num(point.position)}h)"
    parts = [f"anchor={point.anchor}"]
    if point.offset:
        if point.dist is not None and point.dist.hours == abs(point.offset):
            parts.append(f"dist={point.dist}")
            if point.offset > 0:
                parts.append("dir=future")
        else:
            parts.append(f"offset={_num(point.offset)}h")
    return f"Instant({','.join(parts)})"


def _opt_length(length: Optional[Length]) -> str:
    return "Unknown" if length is None else str(length)


def render(expr: TimeExpression) -> str:
    """Canonical one-line rendering used by golden tests and the CLI."""
    if isinstance(expr, Instant):
        return render_point(expr.position)
    if isinstance(expr, Interval):
        return (f"Interval(start={render_point(expr.start)},end={render_point(expr.end)},"
                f"length={_opt_length(expr.length)})")
    if isinstance(expr, Range):
        text = (f"Range(lower={render_point(expr.lower)},upper={render_point(expr.upper)},"
                f"span={_opt_length(expr.span_length)}")
        if expr.inner_length is not None:
            text += f",inner={expr.inner_length}"
        return text + ")"
    if isinstance(expr, BareLength):
        return str(expr.length)
    raise TypeError(f"not a time expression: {expr!r}")
