"""Machine-readable output: boolean features and certain pairwise relations."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple, Optional, Sequence

from stage.normalize import position_of, present_unit_bounds
from stage.timecore import (
    PRESENT, BareLength, ExplicitDate, Instant, Interval, Known, PresentUnit, Range, Relative,
    TimeExpression, TimePoint, Unknown,
)


class Relation(enum.Enum):
    AFTER = "a"
    BEFORE = "b"
    SIMULTANEOUS = "s"
    INCLUDES = "i"
    IS_INCLUDED = "ii"
    VAGUE = "v"

    @property
    def inverse(self) -> "Relation":
        return _INVERSE[self]

    def __str__(self):
        return self.value


_INVERSE = {
    Relation.AFTER: Relation.BEFORE, Relation.BEFORE: Relation.AFTER,
    Relation.INCLUDES: Relation.IS_INCLUDED, Relation.IS_INCLUDED: Relation.INCLUDES,
    Relation.SIMULTANEOUS: Relation.SIMULTANEOUS, Relation.VAGUE: Relation.VAGUE,
}


@dataclass(frozen=True)
class FeatureVector:
    is_point: bool
    start_is_interval: bool
    end_is_interval: bool
    length_is_interval: bool

    def as_tuple(self) -> tuple[bool, bool, bool, bool]:
        return (self.is_point, self.start_is_interval, self.end_is_interval, self.length_is_interval)

    def record(self) -> dict:
        return {"is_point": self.is_point, "start_is_int": self.start_is_interval,
                "end_is_int": self.end_is_interval, "len_is_int": self.length_is_interval}


@dataclass(frozen=True)
class StageConstraint:
    source: str
    target: str
    relation: Relation

    def __post_init__(self):
        if self.relation is Relation.VAGUE:
            raise ValueError("only certain relations are emitted")

    def record(self) -> dict:
        return {"source": self.source, "target": self.target, "relation": self.relation.value}


def features(expr: TimeExpression) -> FeatureVector:
    if isinstance(expr, Instant):
        return FeatureVector(True, True, True, False)
    if isinstance(expr, Interval):
        return FeatureVector(False, True, True, expr.length is not None)
    if isinstance(expr, Range):
        # a range merged with a "for <length>" interval knows the event's length
        return FeatureVector(False, False, False, expr.inner_length is not None)
    if isinstance(expr, BareLength):
        raise ValueError("a bare length has no position; features need a complete expression")
    raise TypeError(f"not a time expression: {expr!r}")


def merge_expressions(exprs: Sequence[TimeExpression]) -> Optional[TimeExpression]:
    """Fold a floating "for <length>" interval into a co-occurring range.

    "for an hour sometime next week" yields the week's bounds plus the
    event's exact length.  Anything else keeps the first expression.
    """
    if not exprs:
        return None
    floating = [e for e in exprs if isinstance(e, Interval) and e.length is not None
                and isinstance(e.start, Unknown) and isinstance(e.end, Unknown)]
    ranges = [e for e in exprs if isinstance(e, Range) and e.inner_length is None]
    if floating and ranges:
        rng = ranges[0]
        return Range(rng.lower, rng.upper, rng.span_length, floating[0].length)
    return exprs[0]


# -- bound arithmetic ------------------------------------------------------

class Value(NamedTuple):
    key: object  # None for absolute positions, else the shared anchor
    at: Fraction

    def shift(self, hours: Fraction) -> "Value":
        return Value(self.key, self.at + hours)


class PointBounds(NamedTuple):
    lo: Value
    hi: Value


def point_bounds(point: TimePoint) -> Optional[PointBounds]:
    if isinstance(point, Known):
        v = Value(None, point.position)
        return PointBounds(v, v)
    if isinstance(point, Relative):
        if isinstance(point.anchor, ExplicitDate):
            v = Value(None, position_of(point.anchor.when) + point.offset)
            return PointBounds(v, v)
        if isinstance(point.anchor, PresentUnit):
            # unresolved calendar boundary: sound bounds around the present
            lo, hi = present_unit_bounds(point.anchor)
            return PointBounds(Value(PRESENT, lo + point.offset), Value(PRESENT, hi + point.offset))
        v = Value(point.anchor, point.offset)
        return PointBounds(v, v)
    return None


class EventBounds(NamedTuple):
    start_lo: Optional[Value]
    start_hi: Optional[Value]
    end_lo: Optional[Value]
    end_hi: Optional[Value]
    exact: bool


def _shift(v: Optional[Value], hours) -> Optional[Value]:
    return None if v is None else v.shift(hours)


def event_bounds(expr: TimeExpression) -> EventBounds:
    """Earliest/latest start and end of the event the expression is attached to."""
    if isinstance(expr, Instant):
        b = point_bounds(expr.position)
        if b is None:
            return EventBounds(None, None, None, None, False)
        return EventBounds(b.lo, b.hi, b.lo, b.hi, b.lo == b.hi)
    if isinstance(expr, Interval):
        s, e = point_bounds(expr.start), point_bounds(expr.end)
        length = expr.length.hours if expr.length is not None else None
        if s is not None:
            start_lo, start_hi = s.lo, s.hi
        elif e is not None and length is not None:
            start_lo, start_hi = e.lo.shift(-length), e.hi.shift(-length)
        else:
            start_lo, start_hi = None, (e.hi if e is not None else None)
        if e is not None:
            end_lo, end_hi = e.lo, e.hi
        elif s is not None and length is not None:
            end_lo, end_hi = s.lo.shift(length), s.hi.shift(length)
        else:
            end_lo, end_hi = (s.lo if s is not None else None), None
        exact = (start_lo is not None and start_lo == start_hi
                 and end_lo is not None and end_lo == end_hi)
        return EventBounds(start_lo, start_hi, end_lo, end_hi, exact)
    if isinstance(expr, Range):
        lo, hi = point_bounds(expr.lower), point_bounds(expr.upper)
        lower = lo.lo if lo is not None else None
        upper = hi.hi if hi is not None else None
        inner = expr.inner_length.hours if expr.inner_length is not None else 0
        return EventBounds(lower, _shift(upper, -inner), _shift(lower, inner), upper, False)
    raise ValueError(f"no event bounds for {expr!r}")


def _lt(x: Optional[Value], y: Optional[Value]) -> bool:
    return x is not None and y is not None and x.key == y.key and x.at < y.at


def _eq(x: Optional[Value], y: Optional[Value]) -> bool:
    return x is not None and y is not None and x.key == y.key and x.at == y.at


def derive_relation(a: TimeExpression, b: TimeExpression) -> Optional[Relation]:
    """Relation of ``a`` to ``b`` when the bounds alone make it certain, else ``None``."""
    if isinstance(a, BareLength) or isinstance(b, BareLength):
        return None
    ba, bb = event_bounds(a), event_bounds(b)
    if _lt(ba.end_hi, bb.start_lo):
        return Relation.BEFORE
    if _lt(bb.end_hi, ba.start_lo):
        return Relation.AFTER
    if not (ba.exact and bb.exact):
        return None
    if _eq(ba.start_lo, bb.start_lo) and _eq(ba.end_lo, bb.end_lo):
        return Relation.SIMULTANEOUS
    if _lt(ba.start_lo, bb.start_lo) and _lt(bb.end_lo, ba.end_lo):
        return Relation.INCLUDES
    if _lt(bb.start_lo, ba.start_lo) and _lt(ba.end_lo, bb.end_lo):
        return Relation.IS_INCLUDED
    return None


def generate_constraints(events: Iterable[tuple[str, TimeExpression]],
                         both_orientations: bool = False) -> list[StageConstraint]:
    """Certain relations between every pair of events, sorted by (source, target).

    Each unordered pair is oriented as the events were given unless
    ``both_orientations`` asks for the inverse records too.
    """
    events = list(events)
    ids = [eid for eid, _ in events]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate event ids")
    out = []
    for i, (x, ex) in enumerate(events):
        for y, ey in events[i + 1:]:
            rel = derive_relation(ex, ey)
            if rel is None:
                continue
            out.append(StageConstraint(x, y, rel))
            if both_orientations:
                out.append(StageConstraint(y, x, rel.inverse))
    return sorted(out, key=lambda c: (c.source, c.target))


def dummy_constraints(timexes: Sequence[tuple[str, TimeExpression]],
                      events: Sequence[tuple[str, TimeExpression]]) -> list[StageConstraint]:
    """Relations between each time-expression node and every other node.

    ``events`` carry the expression of their attached cue.  Pairs are
    oriented dummy-first; dummy-dummy pairs appear once.
    """
    dummy_ids = [d for d, _ in timexes]
    if len(set(dummy_ids)) != len(dummy_ids):
        raise ValueError("duplicate time-expression ids")
    if set(dummy_ids) & {e for e, _ in events}:
        raise ValueError("time-expression ids collide with event ids")
    out = []
    for i, (d, ed) in enumerate(timexes):
        others = list(timexes[i + 1:]) + list(events)
        for x, ex in others:
            rel = derive_relation(ed, ex)
            if rel is not None:
                out.append(StageConstraint(d, x, rel))
    return sorted(out, key=lambda c: (c.source, c.target))
