"""Domain types for disjunctive temporal networks with uncertainty (DTNUs).

A DTNU bundles controllable timepoints (scheduled by the agent),
uncontrollable timepoints (occurring on their own inside contingency
windows), disjunctive interval constraints, and contingency links.
All time arithmetic is exact rational; +inf/-inf appear only as
interval bounds, never as scheduling times.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Optional, Union

RationalLike = Union[int, str, Fraction, "TimeValue"]


class TimeValue:
    """Exact extended rational: a finite Fraction or a +inf/-inf sentinel."""

    __slots__ = ("frac", "inf", "_hash")

    def __init__(self, value: Union[int, str, Fraction] = 0, inf: int = 0):
        if inf:
            self.inf = 1 if inf > 0 else -1
            self.frac = None
        else:
            self.inf = 0
            self.frac = value if type(value) is Fraction else Fraction(value)
        self._hash = None

    @property
    def finite(self) -> bool:
        return self.inf == 0

    def as_fraction(self) -> Fraction:
        if self.inf:
            raise ArithmeticError("infinite TimeValue has no fraction")
        return self.frac

    def __add__(self, other: "TimeValue") -> "TimeValue":
        if self.inf or other.inf:
            if self.inf and other.inf and self.inf != other.inf:
                raise ArithmeticError("inf + -inf is undefined")
            return INF if (self.inf or other.inf) > 0 else NEG_INF
        return TimeValue(self.frac + other.frac)

    def __sub__(self, other: "TimeValue") -> "TimeValue":
        return self + (-other)

    def __neg__(self) -> "TimeValue":
        if self.inf:
            return NEG_INF if self.inf > 0 else INF
        return TimeValue(-self.frac)

    def _key(self):
        # order key: -inf sorts first, +inf last, finite values by fraction
        return (self.inf, self.frac if self.inf == 0 else Fraction(0))

    def __eq__(self, other) -> bool:
        if not isinstance(other, TimeValue):
            return NotImplemented
        if self.inf or other.inf:
            return self.inf == other.inf
        return self.frac == other.frac

    def __lt__(self, other: "TimeValue") -> bool:
        if self.inf or other.inf:
            if self.inf and other.inf:
                return self.inf < other.inf
            if self.inf:
                return self.inf < 0
            return other.inf > 0
        return self.frac < other.frac

    def __le__(self, other: "TimeValue") -> bool:
        return self == other or self < other

    def __gt__(self, other: "TimeValue") -> bool:
        return other < self

    def __ge__(self, other: "TimeValue") -> bool:
        return other <= self

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(("inf", self.inf)) if self.inf else hash(self.frac)
        return self._hash

    def __str__(self) -> str:
        if self.inf:
            return "inf" if self.inf > 0 else "-inf"
        dec = decimal_str(self.frac)
        return dec if dec is not None else f"{self.frac.numerator}/{self.frac.denominator}"

    def __repr__(self) -> str:
        return f"tv({self})"


def tv(value: RationalLike) -> TimeValue:
    """Coerce ints, decimal/fraction strings, Fractions, or 'inf'/'-inf'."""
    if isinstance(value, TimeValue):
        return value
    if isinstance(value, str):
        s = value.strip()
        if s in ("inf", "+inf"):
            return INF
        if s == "-inf":
            return NEG_INF
        return TimeValue(Fraction(s))
    return TimeValue(value)


INF = TimeValue(0, inf=1)
NEG_INF = TimeValue(0, inf=-1)
ZERO = TimeValue(0)


def decimal_str(f: Fraction) -> Optional[str]:
    """Exact decimal rendering, or None if the denominator is not 10-smooth."""
    den = f.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return None
    digits = max(twos, fives)
    scaled = f.numerator * 10**digits // f.denominator
    if digits == 0:
        return str(scaled)
    sign = "-" if scaled < 0 else ""
    text = str(abs(scaled)).rjust(digits + 1, "0")
    return f"{sign}{text[:-digits]}.{text[-digits:]}"


@dataclass(frozen=True)
class Interval:
    """Closed interval [lo, hi]; construction with lo > hi is rejected."""

    lo: TimeValue
    hi: TimeValue

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    def contains(self, t: TimeValue) -> bool:
        return self.lo <= t <= self.hi

    def shift(self, delta: TimeValue) -> "Interval":
        return Interval(self.lo + delta, self.hi + delta)

    def intersects(self, other: "Interval") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def intersect(self, other: "Interval") -> Optional["Interval"]:
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        return Interval(lo, hi) if lo <= hi else None

    def __str__(self) -> str:
        return f"[{self.lo}, {self.hi}]"


def iv(lo: RationalLike, hi: RationalLike) -> Interval:
    return Interval(tv(lo), tv(hi))


def merge_intervals(intervals: Iterable[Interval]) -> tuple[Interval, ...]:
    """Sort and union overlapping or touching intervals."""
    ordered = sorted(intervals, key=lambda i: (i.lo._key(), i.hi._key()))
    merged: list[Interval] = []
    for cur in ordered:
        if merged and cur.lo <= merged[-1].hi:
            if cur.hi > merged[-1].hi:
                merged[-1] = Interval(merged[-1].lo, cur.hi)
        else:
            merged.append(cur)
    return tuple(merged)


class Kind(enum.Enum):
    CONTROLLABLE = "controllable"
    UNCONTROLLABLE = "uncontrollable"


@dataclass(frozen=True)
class Timepoint:
    """A named event time; ids are authoritative, indices derived."""

    id: str
    kind: Kind
    index: int

    def __repr__(self) -> str:
        return f"<{self.id}>"


def controllable(id: str, index: int) -> Timepoint:
    return Timepoint(id, Kind.CONTROLLABLE, index)


def uncontrollable(id: str, index: int) -> Timepoint:
    return Timepoint(id, Kind.UNCONTROLLABLE, index)


@dataclass(frozen=True)
class Conjunct:
    """Atomic constraint: v in iv (unary) or v - vi in iv (binary)."""

    v: Timepoint
    iv: Interval
    vi: Optional[Timepoint] = None

    @property
    def unary(self) -> bool:
        return self.vi is None

    def references(self, tp: Timepoint) -> bool:
        return self.v == tp or self.vi == tp

    def __str__(self) -> str:
        if self.unary:
            return f"{self.v.id} in {self.iv}"
        return f"{self.v.id} - {self.vi.id} in {self.iv}"


@dataclass(frozen=True)
class Disjunct:
    """OR-combination of conjuncts; satisfied iff at least one holds."""

    conjuncts: tuple[Conjunct, ...]

    def __post_init__(self):
        if not self.conjuncts:
            raise ValueError("a disjunct needs at least one conjunct")

    def references(self, tp: Timepoint) -> bool:
        return any(c.references(tp) for c in self.conjuncts)

    def __str__(self) -> str:
        return " v ".join(str(c) for c in self.conjuncts)


@dataclass(frozen=True)
class ContingencyLink:
    """After `trigger` executes, `target` occurs on its own inside one of
    the offset intervals; intervals are sorted and non-overlapping."""

    trigger: Timepoint
    intervals: tuple[Interval, ...]
    target: Timepoint


@dataclass(frozen=True)
class Dtnu:
    controllables: tuple[Timepoint, ...]
    uncontrollables: tuple[Timepoint, ...]
    constraints: tuple[Disjunct, ...]
    links: tuple[ContingencyLink, ...]

    @cached_property
    def by_id(self) -> dict[str, Timepoint]:
        return {t.id: t for t in self.controllables + self.uncontrollables}

    @cached_property
    def link_by_target(self) -> dict[Timepoint, ContingencyLink]:
        return {l.target: l for l in self.links}

    @cached_property
    def link_by_trigger(self) -> dict[Timepoint, tuple[ContingencyLink, ...]]:
        out: dict[Timepoint, list[ContingencyLink]] = {}
        for l in self.links:
            out.setdefault(l.trigger, []).append(l)
        return {k: tuple(v) for k, v in out.items()}


# --- execution records -------------------------------------------------

@dataclass(frozen=True)
class Exact:
    t: TimeValue


@dataclass(frozen=True)
class Bounded:
    iv: Interval


@dataclass(frozen=True)
class ExecutionRecord:
    """How a timepoint was executed: at an exact time (direct scheduling
    decision) or inside a window (occurrence/reaction during a wait)."""

    timepoint: Timepoint
    when: Union[Exact, Bounded]

    @property
    def earliest(self) -> TimeValue:
        return self.when.t if isinstance(self.when, Exact) else self.when.iv.lo

    @property
    def latest(self) -> TimeValue:
        return self.when.t if isinstance(self.when, Exact) else self.when.iv.hi


# Activation windows of triggered-but-pending uncontrollables, absolute.
ActivationSet = dict[Timepoint, tuple[Interval, ...]]


def activation_windows(link: ContingencyLink, trigger_exec: ExecutionRecord) -> tuple[Interval, ...]:
    """Absolute occurrence windows of link.target given the trigger's record.

    Exact(t) shifts each offset interval by t; Bounded([lo,hi]) widens each
    to [lo+x, hi+y]. Overlapping results are merged.
    """
    if trigger_exec.timepoint != link.trigger:
        raise ValueError(f"record for {trigger_exec.timepoint.id} does not match trigger {link.trigger.id}")
    when = trigger_exec.when
    if isinstance(when, Exact):
        shifted = [w.shift(when.t) for w in link.intervals]
    else:
        shifted = [Interval(when.iv.lo + w.lo, when.iv.hi + w.hi) for w in link.intervals]
    return merge_intervals(shifted)


# --- direct evaluation (used by the verifier and tests) ----------------

def evaluate_conjunct(c: Conjunct, assign: Mapping[Timepoint, TimeValue]) -> bool:
    if c.unary:
        return c.iv.contains(assign[c.v])
    return c.iv.contains(assign[c.v] - assign[c.vi])


def evaluate_disjunct(d: Disjunct, assign: Mapping[Timepoint, TimeValue]) -> bool:
    return any(evaluate_conjunct(c, assign) for c in d.conjuncts)


def violated_disjuncts(constraints: Iterable[Disjunct], assign: Mapping[Timepoint, TimeValue]) -> list[Disjunct]:
    return [d for d in constraints if not evaluate_disjunct(d, assign)]


# --- structural validation ---------------------------------------------

@dataclass
class ValidationReport:
    issues: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.issues

    def add(self, msg: str):
        self.issues.append(msg)


def validate(dtnu: Dtnu) -> ValidationReport:
    """Report every structural violation; an empty report means well-formed."""
    rep = ValidationReport()
    seen: dict[str, Timepoint] = {}
    for t in dtnu.controllables + dtnu.uncontrollables:
        if t.id in seen:
            rep.add(f"duplicate timepoint id {t.id!r}")
        seen[t.id] = t
    for t in dtnu.controllables:
        if t.kind is not Kind.CONTROLLABLE:
            rep.add(f"{t.id} listed as controllable but has kind {t.kind.value}")
    for t in dtnu.uncontrollables:
        if t.kind is not Kind.UNCONTROLLABLE:
            rep.add(f"{t.id} listed as uncontrollable but has kind {t.kind.value}")

    known = set(dtnu.controllables) | set(dtnu.uncontrollables)
    linked: dict[Timepoint, int] = {}
    for link in dtnu.links:
        if link.trigger not in known:
            rep.add(f"link trigger {link.trigger.id} is not a timepoint of this network")
        elif link.trigger.kind is not Kind.CONTROLLABLE:
            rep.add(f"link trigger {link.trigger.id} must be controllable")
        if link.target not in known:
            rep.add(f"link target {link.target.id} is not a timepoint of this network")
        elif link.target.kind is not Kind.UNCONTROLLABLE:
            rep.add(f"link target {link.target.id} must be uncontrollable")
        linked[link.target] = linked.get(link.target, 0) + 1
        if not link.intervals:
            rep.add(f"link onto {link.target.id} has no intervals")
        prev_hi = None
        for w in link.intervals:
            if w.lo < ZERO:
                rep.add(f"link onto {link.target.id}: negative bound in {w}")
            if prev_hi is not None and w.lo < prev_hi:
                rep.add(f"link onto {link.target.id}: intervals not sorted/disjoint at {w}")
            prev_hi = w.hi
    for u in dtnu.uncontrollables:
        n = linked.get(u, 0)
        if n == 0:
            rep.add(f"{u.id} has no contingency link")
        elif n > 1:
            rep.add(f"{u.id} has {n} contingency links, expected exactly one")

    for d in dtnu.constraints:
        for c in d.conjuncts:
            for t in (c.v, c.vi):
                if t is not None and t not in known:
                    rep.add(f"constraint references unknown timepoint {t.id}: {c}")
    return rep
