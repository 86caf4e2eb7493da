"""Wait eligibility and wait-duration discretization.

A wait is eligible when an activated uncontrollable is pending or some
unary conjunct exists.  The duration is the smallest positive candidate
produced by three rules:

1. boundaries of activation windows relative to now,
2. boundaries of unary conjuncts relative to now,
3. boundaries reached by chaining binary precedence conjuncts backwards
   from unary-conjunct bounds (a timepoint may need to be scheduled early
   so that a chain of successors can land inside a window).
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional

from .core import ActivationSet, Disjunct, Interval, TimeValue, Timepoint, ZERO

RULE_ACTIVATION = "activation-window"
RULE_UNARY = "unary-conjunct"
RULE_CHAIN = "backward-chain"


class NoPositiveCandidate(Exception):
    """No rule yields a positive duration; the caller must not build a wait."""


@dataclass(frozen=True)
class WaitDuration:
    delta: TimeValue
    contributors: frozenset[str]


def wait_eligible(node_constraints: Iterable[Disjunct], activated: ActivationSet) -> bool:
    if activated:
        return True
    return any(c.unary for d in node_constraints for c in d.conjuncts)


def _smaller_positive(now: TimeValue, bounds: Iterable[TimeValue]) -> TimeValue | None:
    """Smallest positive finite (bound - now) among the given bounds."""
    best = None
    for b in bounds:
        if not b.finite:
            continue
        cand = b - now
        if cand > ZERO and (best is None or cand < best):
            best = cand
    return best


def _minuend_index(constraints: Iterable[Disjunct]) -> dict[Timepoint, list]:
    """Chainable conjuncts v - v' in [x', y'], finite x' >= 0, keyed by minuend."""
    index: dict[Timepoint, list] = {}
    for d in constraints:
        for c in d.conjuncts:
            if c.unary or not c.iv.lo.finite or c.iv.lo < ZERO:
                continue
            index.setdefault(c.v, []).append(c)
    return index


def backward_chain(
    seed: tuple[Timepoint, TimeValue],
    constraints: Iterable[Disjunct],
    floor: TimeValue | None = None,
    max_pairs: int = 4000,
    index: dict[Timepoint, list] | None = None,
) -> list[TimeValue]:
    """All chained absolute values reachable from (timepoint, value).

    For every conjunct v - v' in [x', y'] with finite x' >= 0 whose minuend
    matches the current timepoint, both value - x' and value - y' are
    emitted and recursed on.  (timepoint, value) pairs are memoized so
    zero-width cycles terminate.

    Chain values only ever decrease, so subtrees at or below ``floor``
    cannot yield positive candidates and are skipped.  ``max_pairs``
    deterministically truncates pathologically branchy value trees; a
    shorter wait is always sound, so truncation never breaks soundness.
    """
    if index is None:
        index = _minuend_index(constraints)
    out: list[TimeValue] = []
    seen: set[tuple[Timepoint, TimeValue]] = set()
    stack = [seed]
    while stack and len(seen) < max_pairs:
        tp, value = stack.pop()
        if not value.finite or (tp, value) in seen:
            continue
        if floor is not None and value <= floor:
            continue
        seen.add((tp, value))
        for c in index.get(tp, ()):
            for bound in (c.iv.lo, c.iv.hi):
                if not bound.finite:
                    continue
                nxt = value - bound
                out.append(nxt)
                stack.append((c.vi, nxt))
    return out


def _chain_sums(tp: Timepoint, index: dict, cap: Fraction, max_pairs: int) -> list[Fraction]:
    """Sorted sums of chainable bound picks along paths from ``tp``.

    A chain candidate is always seed_value - pathsum, so the path sums are
    independent of the seed and of the current time and can be shared and
    bisected.  Sums beyond ``cap`` cannot yield positive candidates for any
    seed of the calling node; ``max_pairs`` truncates deterministically.
    """
    seen: set[tuple[Timepoint, Fraction]] = {(tp, Fraction(0))}
    sums: set[Fraction] = set()
    stack: list[tuple[Timepoint, Fraction]] = [(tp, Fraction(0))]
    while stack and len(seen) < max_pairs:
        v, acc = stack.pop()
        for c in index.get(v, ()):
            for bound in (c.iv.lo, c.iv.hi):
                if not bound.finite:
                    continue
                nxt = acc + bound.frac
                if nxt > cap or (c.vi, nxt) in seen:
                    continue
                seen.add((c.vi, nxt))
                sums.add(nxt)
                stack.append((c.vi, nxt))
    return sorted(sums)


def wait_duration(
    t: TimeValue,
    constraints: Iterable[Disjunct],
    activated: ActivationSet,
    chain_cache: Optional[dict] = None,
) -> WaitDuration:
    """min over the three rules of their smallest positive candidate.

    ``chain_cache`` (optional, solver-owned) reuses rule-3 path sums across
    nodes that share the same chainable-conjunct structure.
    """
    candidates: list[tuple[TimeValue, str]] = []

    for windows in activated.values():
        for w in windows:
            c = _smaller_positive(t, (w.lo, w.hi))
            if c is not None:
                candidates.append((c, RULE_ACTIVATION))

    unary = [c for d in constraints for c in d.conjuncts if c.unary]
    for c in unary:
        cand = _smaller_positive(t, (c.iv.lo, c.iv.hi))
        if cand is not None:
            candidates.append((cand, RULE_UNARY))

    seeds: list[tuple[Timepoint, Fraction]] = []
    for c in unary:
        for bound in (c.iv.lo, c.iv.hi):
            if bound.finite and bound > t:
                seeds.append((c.v, bound.frac))
    if seeds:
        index = _minuend_index(constraints)
        t_frac = t.as_fraction()
        needed_cap = max(value for _, value in seeds) - t_frac
        # cache entries are computed at a fixed instance-level cap so the
        # result never depends on which node populated them first
        static_cap = chain_cache.get("__cap__") if chain_cache is not None else None
        use_cache = static_cap is not None and needed_cap <= static_cap
        per_structure = None
        if use_cache:
            structure = frozenset(c for cs in index.values() for c in cs)
            per_structure = chain_cache.setdefault(structure, {})
        for tp, value in seeds:
            sums = per_structure.get(tp) if per_structure is not None else None
            if sums is None:
                cap = static_cap if use_cache else needed_cap
                sums = _chain_sums(tp, index, cap, max_pairs=4000)
                if per_structure is not None:
                    per_structure[tp] = sums
            # smallest positive (value - s - t) uses the largest s < value - t
            pos = bisect_left(sums, value - t_frac)
            if pos:
                candidates.append((TimeValue(value - sums[pos - 1] - t_frac), RULE_CHAIN))

    if not candidates:
        raise NoPositiveCandidate(f"no positive wait candidate at t={t}")
    delta = min(c for c, _ in candidates)
    rules = frozenset(rule for c, rule in candidates if c == delta)
    return WaitDuration(delta, rules)
