"""Random network generation and self-supervised labeling of root decisions.

Generated instances draw bound values as two-decimal rationals in
[0, 100].  Every timepoint ends up mentioned by at least one conjunct or
contingency link; already-mentioned timepoints pick up an extra disjunct
with small probability.  Labels come from repeated randomized
short-budget explorations of each root decision: the first definite
verdict sticks, and a decision whose every exploration times out is
assumed unsolvable.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from . import search
from .core import (
    Conjunct,
    ContingencyLink,
    Disjunct,
    Dtnu,
    Interval,
    TimeValue,
    Timepoint,
    controllable,
    uncontrollable,
    validate,
)
from .encode import EncodedGraph, to_graph
from .heuristic import RandomOrder
from .waits import wait_eligible


@dataclass(frozen=True)
class GenParams:
    controllables_range: tuple[int, int] = (10, 20)
    uncontrollables_range: tuple[int, int] = (1, 3)
    bound_range: tuple[int, int] = (0, 100)
    max_conjuncts_per_disjunct: int = 5
    constrain_probability: float = 0.2  # extra disjunct for already-covered timepoints
    unary_probability: float = 0.5
    seed: int = 0

    def __post_init__(self):
        for lo, hi in (self.controllables_range, self.uncontrollables_range, self.bound_range):
            if lo > hi:
                raise ValueError("empty range")
        for p in (self.constrain_probability, self.unary_probability):
            if not 0.0 <= p <= 1.0:
                raise ValueError("probability outside [0, 1]")


def _draw_value(rng: random.Random, params: GenParams) -> TimeValue:
    lo, hi = params.bound_range
    cents = rng.randrange(lo * 100, hi * 100 + 1)
    return TimeValue(Fraction(cents, 100))


def _draw_interval(rng: random.Random, params: GenParams) -> Interval:
    a, b = _draw_value(rng, params), _draw_value(rng, params)
    return Interval(min(a, b), max(a, b))


def generate(params: Optional[GenParams] = None) -> Dtnu:
    """Deterministic function of the params (seed included)."""
    params = params or GenParams()
    rng = random.Random(params.seed)
    n1 = rng.randint(*params.controllables_range)
    n2 = rng.randint(*params.uncontrollables_range)
    ctrl = tuple(controllable(f"a{i+1}", i) for i in range(n1))
    unc = tuple(uncontrollable(f"u{j+1}", j) for j in range(n2))
    everything = ctrl + unc

    links = []
    covered: set[Timepoint] = set()
    triggers = rng.sample(ctrl, n2)  # each uncontrollable gets its own trigger
    for u, a in zip(unc, triggers):
        links.append(ContingencyLink(a, (_draw_interval(rng, params),), u))
        covered.add(a)
        covered.add(u)

    def conjunct_for(v: Timepoint) -> Conjunct:
        if rng.random() < params.unary_probability:
            covered.add(v)
            return Conjunct(v, _draw_interval(rng, params))
        partner = rng.choice([t for t in everything if t != v])
        covered.add(v)
        covered.add(partner)
        return Conjunct(v, _draw_interval(rng, params), partner)

    def disjunct_for(v: Timepoint) -> Disjunct:
        count = rng.randint(1, params.max_conjuncts_per_disjunct)
        conjuncts = [conjunct_for(v)]
        for _ in range(count - 1):
            conjuncts.append(conjunct_for(rng.choice(everything)))
        return Disjunct(tuple(conjuncts))

    constraints = []
    for v in everything:
        if v not in covered:
            constraints.append(disjunct_for(v))
        elif rng.random() < params.constrain_probability:
            constraints.append(disjunct_for(v))

    dtnu = Dtnu(ctrl, unc, tuple(constraints), tuple(links))
    report = validate(dtnu)
    assert report.ok, f"generator produced an invalid network: {report.issues}"
    return dtnu


@dataclass(frozen=True)
class LabeledExample:
    graph: EncodedGraph
    labels: tuple[int, ...]  # one per active node: controllables then wait
    meta: dict = field(default_factory=dict, compare=False)


def label_root_decisions(dtnu: Dtnu, nu: int = 25, tau: float = 3.0, seed: int = 0) -> LabeledExample:
    """Explore each root decision up to nu times with budget tau and random
    orderings; 1 = a run proved it solvable, 0 = proved unsolvable or all
    runs timed out.  Only the root decision layer is labeled; sub-problem
    data is never emitted.
    """
    labels: list[int] = []
    wall: list[float] = []
    decisions: list[str] = [a.id for a in dtnu.controllables]
    if wait_eligible(dtnu.constraints, {}):
        decisions.append(search.WAIT_ACTION)
    run_seed = seed

    for k, a in enumerate(dtnu.controllables):
        label, spent = _label_one(dtnu, a.id, nu, tau, seed + k * 10007)
        labels.append(label)
        wall.append(spent)
    if search.WAIT_ACTION in decisions:
        label, spent = _label_one(dtnu, search.WAIT_ACTION, nu, tau, seed + 99991)
    else:
        label, spent = 0, 0.0  # ineligible wait: slot kept for layout stability
    labels.append(label)
    wall.append(spent)

    graph = to_graph(dtnu)
    assert len(labels) == len(graph.active)
    return LabeledExample(
        graph,
        tuple(labels),
        meta={"seed": seed, "nu": nu, "tau": tau, "wall_times": wall, "run_seed": run_seed},
    )


def _label_one(dtnu: Dtnu, action: str, nu: int, tau: float, seed: int) -> tuple[int, float]:
    spent = 0.0
    for run in range(nu):
        config = search.SolveConfig(
            timeout=tau,
            heuristic=RandomOrder(seed + run),
            heuristic_max_dor_depth=10**9,
            root_restrict=action,
            extract_strategy=False,
        )
        verdict = search.solve(dtnu, config)
        spent += verdict.stats.wall_time
        if verdict.outcome == "rtdc":
            return 1, spent
        if verdict.outcome == "not_rtdc":
            return 0, spent
    return 0, spent
