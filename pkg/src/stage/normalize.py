"""Placing composed expressions on the single hours-based timeline."""
from __future__ import annotations

from dataclasses import replace
from datetime import date, datetime, timedelta
from fractions import Fraction
from typing import Optional, Union

from stage.timecore import (
    EPOCH, BareLength, ExplicitDate, Instant, Interval, Known, Present, PresentUnit,
    Range, Relative, TimeExpression, TimePoint, UnitKind, Weekday, YearlessDate,
    unit_to_hours,
)

MIN_YEAR, MAX_YEAR = 1900, 2100

DateLike = Union[str, date, datetime]


def parse_dct(value: Optional[DateLike]) -> Optional[datetime]:
    """Accept an ISO-8601 date or date-time string (or a date object)."""
    if value is None:
        return None
    if isinstance(value, datetime):
        when = value
    elif isinstance(value, date):
        when = datetime(value.year, value.month, value.day)
    else:
        try:
            when = datetime.fromisoformat(str(value).strip())
        except ValueError:
            raise ValueError(f"malformed document date: {value!r}") from None
    if when.tzinfo is not None:
        raise ValueError(f"time zones are not supported: {value!r}")
    _check_range(when)
    return when


def _check_range(when: datetime) -> None:
    if not MIN_YEAR <= when.year <= MAX_YEAR:
        raise ValueError(f"date outside {MIN_YEAR}-{MAX_YEAR}: {when.isoformat()}")


def position_of(when: DateLike) -> Fraction:
    """Exact signed hours from 2000-01-01T00:00."""
    when = parse_dct(when)
    delta = when - EPOCH
    return (Fraction(delta.days * 24)
            + Fraction(delta.seconds, 3600)
            + Fraction(delta.microseconds, 3_600_000_000))


def date_at(position: Fraction) -> datetime:
    """Inverse of ``position_of``; the position must land on a whole microsecond."""
    micros = Fraction(position) * 3_600_000_000
    if micros.denominator != 1:
        raise ValueError(f"position {position} is not on a microsecond")
    when = EPOCH + timedelta(microseconds=int(micros))
    _check_range(when)
    return when


# -- calendar helpers ------------------------------------------------------

def add_months(when: datetime, months: int) -> datetime:
    index = when.year * 12 + when.month - 1 + months
    return when.replace(year=index // 12, month=index % 12 + 1)


def unit_start(when: datetime, unit: UnitKind) -> datetime:
    """Start of the calendar unit containing ``when`` (weeks start on Monday)."""
    if unit is UnitKind.SECOND:
        return when.replace(microsecond=0)
    if unit is UnitKind.MINUTE:
        return when.replace(second=0, microsecond=0)
    if unit is UnitKind.HOUR:
        return when.replace(minute=0, second=0, microsecond=0)
    day = when.replace(hour=0, minute=0, second=0, microsecond=0)
    if unit is UnitKind.DAY:
        return day
    if unit is UnitKind.WEEK:
        return day - timedelta(days=day.weekday())
    if unit is UnitKind.MONTH:
        return day.replace(day=1)
    if unit is UnitKind.QUARTER:
        return day.replace(month=(day.month - 1) // 3 * 3 + 1, day=1)
    if unit is UnitKind.YEAR:
        return day.replace(month=1, day=1)
    return day.replace(year=day.year // 10 * 10, month=1, day=1)


_MONTHS_PER = {UnitKind.MONTH: 1, UnitKind.QUARTER: 3, UnitKind.YEAR: 12, UnitKind.DECADE: 120}


def shift_units(when: datetime, unit: UnitKind, count: int) -> datetime:
    if unit in _MONTHS_PER:
        return add_months(when, count * _MONTHS_PER[unit])
    return when + timedelta(seconds=int(unit_to_hours(unit) * 3600 * count))


# shortest and longest calendar length of each unit, in hours
_CAL_SPAN = {
    UnitKind.MONTH: (Fraction(28 * 24), Fraction(31 * 24)),
    UnitKind.QUARTER: (Fraction(90 * 24), Fraction(92 * 24)),
    UnitKind.YEAR: (Fraction(365 * 24), Fraction(366 * 24)),
    UnitKind.DECADE: (Fraction(3652 * 24), Fraction(3653 * 24)),
}


def unit_span(unit: UnitKind) -> tuple[Fraction, Fraction]:
    return _CAL_SPAN.get(unit, (unit_to_hours(unit), unit_to_hours(unit)))


def present_unit_bounds(anchor: PresentUnit) -> tuple[Fraction, Fraction]:
    """Bounds (lo, hi) on the boundary's offset from the present, valid for any present."""
    lo_len, hi_len = unit_span(anchor.unit)
    k = anchor.shift
    # start of the current unit lies in (present - longest unit, present]
    if k >= 1:
        lo = (k - 1) * lo_len
    else:
        lo = -(1 - k) * hi_len
    hi = k * hi_len if k >= 0 else k * lo_len
    return lo, hi


def _nearest_year(month: int, dct: datetime) -> int:
    # nearest occurrence of the month to the dct; ties go to the dct's year
    best = None
    for year in (dct.year, dct.year - 1, dct.year + 1):
        start = datetime(year, month, 1)
        end = add_months(start, 1)
        gap = max(start - dct, dct - end, timedelta(0))
        if best is None or gap < best[0]:
            best = (gap, year)
    return best[1]


def anchor_datetime(anchor, dct: Optional[datetime]) -> Optional[datetime]:
    """Calendar instant of an anchor, or ``None`` if it needs a missing document date."""
    if isinstance(anchor, ExplicitDate):
        return anchor.when
    if dct is None:
        return None
    if isinstance(anchor, Present):
        return dct
    if isinstance(anchor, PresentUnit):
        return shift_units(unit_start(dct, anchor.unit), anchor.unit, anchor.shift)
    if isinstance(anchor, Weekday):
        today = unit_start(dct, UnitKind.DAY)
        back = (today.weekday() - anchor.weekday) % 7
        forward = (anchor.weekday - today.weekday()) % 7
        # nearest occurrence; the distances sum to 7, so only "today" needs the <=
        return today - timedelta(days=back) if back <= forward else today + timedelta(days=forward)
    if isinstance(anchor, YearlessDate):
        year = _nearest_year(anchor.month, dct)
        if anchor.day is not None:
            start = datetime(year, anchor.month, anchor.day)
            return start if anchor.edge == "start" else start + timedelta(days=1)
        if anchor.edge == "start":
            return datetime(year, anchor.month, 1)
        last = anchor.last_month or anchor.month
        last_year = year if last >= anchor.month else year + 1
        return add_months(datetime(last_year, last, 1), 1)
    raise TypeError(f"unknown anchor {anchor!r}")


def resolve_point(point: TimePoint, dct: Optional[datetime]) -> TimePoint:
    if not isinstance(point, Relative):
        return point
    when = anchor_datetime(point.anchor, dct)
    if when is None:
        return point
    return Known(position_of(when) + point.offset)


def resolve(expr: TimeExpression, dct: Optional[DateLike] = None) -> TimeExpression:
    """Resolve anchors against the document date (``dct``) and the calendar.

    Present-anchored points stay relative when no document date is given.
    """
    dct = parse_dct(dct)
    if isinstance(expr, Instant):
        return Instant(resolve_point(expr.position, dct))
    if isinstance(expr, Interval):
        start, end = resolve_point(expr.start, dct), resolve_point(expr.end, dct)
        if (isinstance(start, Known) and isinstance(end, Known) and end.position < start.position
                and isinstance(expr.end, Relative) and isinstance(expr.end.anchor, YearlessDate)):
            # "from November to February": the end falls in the following year
            end = Known(position_of(add_months(date_at(end.position), 12)))
        return replace(expr, start=start, end=end)
    if isinstance(expr, Range):
        return replace(expr, lower=resolve_point(expr.lower, dct), upper=resolve_point(expr.upper, dct))
    if isinstance(expr, BareLength):
        return expr
    raise TypeError(f"not a time expression: {expr!r}")
