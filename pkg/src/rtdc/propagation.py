"""Constraint rewriting after scheduling decisions and waits.

Three rewriting passes keep the constraint list current as execution
knowledge accumulates:

* ``propagate_exact``   -- a timepoint was scheduled at a known time t;
* ``propagate_bounded`` -- a timepoint executed somewhere inside a window
  [lo, hi] (an occurrence or a reaction during a wait), resolved with
  *tight bounds*: the rewritten interval must hold for every possible
  execution time in the window;
* ``expire_unary``      -- after time advances, unary conjuncts on
  still-unscheduled controllables whose upper bound has passed are dead.

A disjunct whose conjuncts all resolve to false makes the network
unsatisfiable; satisfied disjuncts are dropped from the updated list.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Union

from .core import (
    ZERO,
    Conjunct,
    Disjunct,
    Interval,
    Kind,
    TimeValue,
    Timepoint,
)

# conjunct rewrite outcomes
_TRUE = object()
_FALSE = object()
_Rewrite = Union[Conjunct, object]


@dataclass(frozen=True)
class PropagationStatus:
    """Result of one rewriting pass.

    When ``violated`` is true, ``updated`` is empty and ``culprit`` names
    the original disjunct whose conjuncts all became false.
    """

    violated: bool
    updated: tuple[Disjunct, ...]
    culprit: Optional[Disjunct] = None

    @property
    def verdict(self) -> str:
        return "violated" if self.violated else "open"


def _apply(constraints: Iterable[Disjunct], rewrite: Callable[[Conjunct], _Rewrite]) -> PropagationStatus:
    updated: list[Disjunct] = []
    for d in constraints:
        kept: list[Conjunct] = []
        satisfied = False
        changed = False
        for c in d.conjuncts:
            r = rewrite(c)
            if r is _TRUE:
                satisfied = True
                break
            if r is _FALSE:
                changed = True
                continue
            if r is not c:
                changed = True
            kept.append(r)
        if satisfied:
            continue
        if not kept:
            return PropagationStatus(True, (), culprit=d)
        updated.append(Disjunct(tuple(kept)) if changed else d)
    return PropagationStatus(False, tuple(updated))


def propagate_exact(constraints: Iterable[Disjunct], tp: Timepoint, t: TimeValue) -> PropagationStatus:
    """Resolve/rewrite every conjunct mentioning ``tp`` scheduled at exact ``t``.

    Unary conjuncts on tp become true/false; a binary conjunct loses tp and
    turns into a unary conjunct on the other timepoint.
    """

    def rewrite(c: Conjunct) -> _Rewrite:
        if c.unary:
            if c.v != tp:
                return c
            return _TRUE if c.iv.contains(t) else _FALSE
        if c.v == tp and c.vi == tp:
            # degenerate self-difference: v - v = 0
            return _TRUE if c.iv.contains(ZERO) else _FALSE
        if c.vi == tp:
            # v - tp in [x, y]  =>  v in [t+x, t+y]
            return Conjunct(c.v, Interval(t + c.iv.lo, t + c.iv.hi))
        if c.v == tp:
            # tp - vi in [x, y]  =>  vi in [t-y, t-x]
            return Conjunct(c.vi, Interval(t - c.iv.hi, t - c.iv.lo))
        return c

    return _apply(constraints, rewrite)


def propagate_bounded(
    constraints: Iterable[Disjunct],
    tp: Timepoint,
    window: Interval,
    reactive_pairs: frozenset[tuple[Timepoint, Timepoint]] = frozenset(),
) -> PropagationStatus:
    """Tight-bound resolution for ``tp`` executed somewhere in ``window``.

    For v - tp in [x, y] the surviving interval is [window.hi + x,
    window.lo + y]; it is false when empty.  For tp - vi the mirrored
    rule applies.  Unary conjuncts on tp must hold for the whole window.
    A conjunct u - phi in [0, y] whose (u, phi) pair was reactively
    coupled in this wait is satisfied outright: phi executes at u's time.
    """

    def rewrite(c: Conjunct) -> _Rewrite:
        if c.unary:
            if c.v != tp:
                return c
            # must hold for every execution time in the window
            return _TRUE if (c.iv.contains(window.lo) and c.iv.contains(window.hi)) else _FALSE
        if c.v != tp and c.vi != tp:
            return c
        if (c.v, c.vi) in reactive_pairs and c.iv.lo == ZERO:
            return _TRUE
        if c.v == tp and c.vi == tp:
            return _TRUE if c.iv.contains(ZERO) else _FALSE
        if c.vi == tp:
            # v - tp in [x, y], tp anywhere in [lo, hi]  =>  v in [hi+x, lo+y]
            lo = window.hi + c.iv.lo
            hi = window.lo + c.iv.hi
            return Conjunct(c.v, Interval(lo, hi)) if lo <= hi else _FALSE
        if c.v == tp:
            # tp - vi in [x, y]  =>  vi in [hi-y, lo-x]
            lo = window.hi - c.iv.hi
            hi = window.lo - c.iv.lo
            return Conjunct(c.vi, Interval(lo, hi)) if lo <= hi else _FALSE
        return c

    return _apply(constraints, rewrite)


def expire_unary(constraints: Iterable[Disjunct], now: TimeValue) -> PropagationStatus:
    """Kill unary conjuncts on unscheduled controllables whose upper bound
    lies strictly in the past; at now == hi the timepoint is still schedulable."""

    def rewrite(c: Conjunct) -> _Rewrite:
        if c.unary and c.v.kind is Kind.CONTROLLABLE and now > c.iv.hi:
            return _FALSE
        return c

    return _apply(constraints, rewrite)
