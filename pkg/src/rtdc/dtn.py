"""Feasibility and witness extraction for disjunctive temporal networks
over controllables only (search-tree leaves).

One conjunct is chosen per disjunct depth-first; each complete choice is
a simple temporal network whose consistency is decided by negative-cycle
detection on the distance graph.  Unary bounds become edges to/from a
synthetic zero-reference variable.  The witness is the earliest-times
assignment from shortest-path potentials.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .core import Conjunct, Disjunct, TimeValue, Timepoint

_Edge = tuple[int, int, Fraction]  # (src, dst, weight): t[dst] - t[src] <= weight


class BudgetExhausted(Exception):
    """The deadline passed before the choice tree was exhausted."""


@dataclass(frozen=True)
class DtnProblem:
    variables: tuple[Timepoint, ...]
    disjuncts: tuple[Disjunct, ...]


def _conjunct_edges(c: Conjunct, idx: dict[Timepoint, int], ref: int) -> list[_Edge]:
    edges: list[_Edge] = []
    lo, hi = c.iv.lo, c.iv.hi
    if c.unary:
        v = idx[c.v]
        if hi.finite:
            edges.append((ref, v, hi.as_fraction()))
        if lo.finite:
            edges.append((v, ref, -lo.as_fraction()))
    else:
        v, vi = idx[c.v], idx[c.vi]
        if hi.finite:
            edges.append((vi, v, hi.as_fraction()))
        if lo.finite:
            edges.append((v, vi, -lo.as_fraction()))
    return edges


def _consistent(n_nodes: int, edges: list[_Edge]) -> bool:
    """Bellman-Ford negative-cycle detection (virtual zero super-source)."""
    dist = [Fraction(0)] * n_nodes
    for _ in range(n_nodes):
        changed = False
        for u, v, w in edges:
            alt = dist[u] + w
            if alt < dist[v]:
                dist[v] = alt
                changed = True
        if not changed:
            return True
    for u, v, w in edges:
        if dist[u] + w < dist[v]:
            return False
    return True


def _earliest_times(n_vars: int, ref: int, edges: list[_Edge]) -> list[Fraction]:
    """Earliest-times potentials: t[v] = -shortest_path(v -> ref).

    Padding edges v -> ref with a huge weight keep every variable
    reachable without tightening any real constraint.
    """
    big = Fraction(1) + sum(abs(w) for _, _, w in edges)
    padded = edges + [(v, ref, big) for v in range(n_vars)]
    # shortest v -> ref distances = Bellman-Ford from ref over reversed edges
    inf = None
    dist: list[Optional[Fraction]] = [inf] * (n_vars + 1)
    dist[ref] = Fraction(0)
    for _ in range(n_vars + 1):
        changed = False
        for u, v, w in padded:  # reversed edge v -> u
            if dist[v] is not None:
                alt = dist[v] + w
                if dist[u] is None or alt < dist[u]:
                    dist[u] = alt
                    changed = True
        if not changed:
            break
    return [-dist[v] for v in range(n_vars)]


def solve_dtn(p: DtnProblem, deadline: Optional[float] = None) -> Optional[dict[Timepoint, TimeValue]]:
    """First feasible assignment found, or None if every choice is inconsistent.

    ``deadline`` is a time.monotonic() stamp; crossing it raises
    BudgetExhausted rather than returning a misleading verdict.
    """
    idx = {t: i for i, t in enumerate(p.variables)}
    ref = len(p.variables)
    n = ref + 1
    # fail-first: fewer conjuncts = fewer choices, try those disjuncts early
    order = sorted(p.disjuncts, key=lambda d: len(d.conjuncts))

    edges: list[_Edge] = []

    def dfs(k: int) -> bool:
        if deadline is not None and time.monotonic() > deadline:
            raise BudgetExhausted
        if k == len(order):
            return True
        for c in order[k].conjuncts:
            new = _conjunct_edges(c, idx, ref)
            edges.extend(new)
            if _consistent(n, edges) and dfs(k + 1):
                return True
            if new:
                del edges[-len(new):]
        return False

    if not dfs(0):
        return None
    times = _earliest_times(len(p.variables), ref, edges)
    return {t: TimeValue(times[i]) for t, i in idx.items()}
