"""Depth-first AND-OR tree search deciding restricted time-based dynamic
controllability and recording the decisions a reactive strategy needs.

Tree shape: a non-terminal network node has a single decision node
(d-OR) whose children schedule one controllable each at the current
time, plus -- when waiting is eligible -- a WAIT node.  A WAIT node has
one w-OR child enumerating reactive wait strategies; each reactive
strategy is an AND node whose children are the outcome combinations of
uncontrollable timepoints that can occur during the wait.  Truth values
(true = reactively schedulable from here, false = not) propagate
upward: OR nodes need one true child, AND nodes need all of them.
"""

from __future__ import annotations

import itertools
import logging
import sys
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

from . import dtn
from .core import (
    INF,
    ZERO,
    ActivationSet,
    Bounded,
    Conjunct,
    Disjunct,
    Dtnu,
    Exact,
    ExecutionRecord,
    Interval,
    Kind,
    TimeValue,
    Timepoint,
    activation_windows,
    validate,
)
from .propagation import _FALSE, _apply, expire_unary, propagate_bounded, propagate_exact
from .waits import NoPositiveCandidate, wait_duration, wait_eligible

log = logging.getLogger("rtdc.search")

WAIT_ACTION = "__wait__"

_DEEP_STACK_BYTES = 256 * 1024 * 1024
_DEEP_RECURSION_LIMIT = 1_000_000


def run_deep(fn: Callable[[], object]) -> object:
    """Run ``fn`` on a thread with a large stack and a raised recursion
    limit: exploration, extraction and verification recurse once per tree
    level, and deep wait chains overflow default limits."""
    box: dict = {}

    def work():
        old_limit = sys.getrecursionlimit()
        sys.setrecursionlimit(_DEEP_RECURSION_LIMIT)
        try:
            box["value"] = fn()
        except BaseException as exc:  # re-raised on the caller's thread
            box["error"] = exc
        finally:
            sys.setrecursionlimit(old_limit)

    old_size = threading.stack_size(_DEEP_STACK_BYTES)
    try:
        worker = threading.Thread(target=work, name="rtdc-deep")
        worker.start()
    finally:
        threading.stack_size(old_size)
    worker.join()
    if "error" in box:
        raise box["error"]
    return box["value"]


class InvalidInput(Exception):
    def __init__(self, issues: list[str]):
        super().__init__("; ".join(issues))
        self.issues = issues


class SearchTimeout(Exception):
    pass


# --- tree nodes ---------------------------------------------------------

class TreeNode:
    __slots__ = ("parent", "truth", "children")

    def __init__(self, parent: Optional["TreeNode"]):
        self.parent = parent
        self.truth: Optional[bool] = None
        self.children: list[TreeNode] = []


class DtnuNode(TreeNode):
    __slots__ = (
        "now", "scheduled", "occurred", "activated", "constraints",
        "since_wait", "session", "leaf_schedule", "action", "alias",
    )

    def __init__(
        self,
        parent: Optional[TreeNode],
        now: TimeValue,
        scheduled: dict[Timepoint, ExecutionRecord],
        occurred: dict[Timepoint, ExecutionRecord],
        activated: ActivationSet,
        constraints: tuple[Disjunct, ...],
        since_wait: frozenset[Timepoint],
        session: set[frozenset[Timepoint]],
        action: object = None,
    ):
        super().__init__(parent)
        self.now = now
        self.scheduled = scheduled
        self.occurred = occurred
        self.activated = activated
        self.constraints = constraints
        self.since_wait = since_wait
        self.session = session
        self.leaf_schedule: Optional[dict[Timepoint, TimeValue]] = None
        self.action = action
        self.alias: Optional["DtnuNode"] = None  # resolved node with the same state


class DOrNode(TreeNode):
    __slots__ = ("depth", "exhausted")

    def __init__(self, parent: DtnuNode, depth: int):
        super().__init__(parent)
        self.depth = depth
        self.exhausted = False


class WaitNode(TreeNode):
    __slots__ = ("base", "delta")

    def __init__(self, parent: DOrNode, base: DtnuNode, delta: TimeValue):
        super().__init__(parent)
        self.base = base
        self.delta = delta


class WOrNode(TreeNode):
    __slots__ = ("base", "delta", "outcomes", "combos", "occ_windows", "exhausted")

    def __init__(self, parent: WaitNode, base: DtnuNode, delta: TimeValue):
        super().__init__(parent)
        self.base = base
        self.delta = delta
        self.outcomes, self.combos, self.occ_windows = enumerate_outcomes(
            base.activated, base.now, delta
        )
        self.exhausted = False


class AndNode(TreeNode):
    __slots__ = ("base", "delta", "wor", "reactive", "exhausted")

    def __init__(self, parent: WOrNode, reactive: dict[Timepoint, tuple[Timepoint, ...]]):
        super().__init__(parent)
        self.base = parent.base
        self.delta = parent.delta
        self.wor = parent
        self.reactive = reactive
        self.exhausted = False


# --- outcome and reactive-strategy enumeration --------------------------

@dataclass(frozen=True)
class OutcomeSets:
    certain: tuple[Timepoint, ...]   # will occur before the wait ends
    possible: tuple[Timepoint, ...]  # may occur during the wait or later


def enumerate_outcomes(
    activated: ActivationSet, t: TimeValue, delta: TimeValue
) -> tuple[OutcomeSets, list[frozenset[Timepoint]], dict[Timepoint, Interval]]:
    """Classify activated timepoints against the wait [t, t+delta] and list
    every occurrence combination, empty set first, then by size and index.

    Also returns, per classified timepoint, the window the occurrence is
    assumed to fall in: the envelope of its activation windows clipped to
    the wait.
    """
    end = t + delta
    certain: list[Timepoint] = []
    possible: list[Timepoint] = []
    occ: dict[Timepoint, Interval] = {}
    for u in sorted(activated, key=lambda u: u.index):
        windows = activated[u]
        over = [w for w in windows if w.lo <= end and w.hi >= t]
        if not over:
            continue
        union_end = max(w.hi for w in windows)
        if union_end <= end:
            certain.append(u)
        else:
            possible.append(u)
        lo = max(min(w.lo for w in over), t)
        hi = min(max(w.hi for w in over), end)
        occ[u] = Interval(lo, hi)
    base = frozenset(certain)
    combos = [
        base | frozenset(ys)
        for k in range(len(possible) + 1)
        for ys in itertools.combinations(possible, k)
    ]
    return OutcomeSets(tuple(certain), tuple(possible)), combos, occ


def enumerate_reactive(
    node: DtnuNode, outcomes: OutcomeSets
) -> list[dict[Timepoint, tuple[Timepoint, ...]]]:
    """All reactive wait strategies: one per subset of the controllables
    that may instantly react to an overlapping uncontrollable, empty first.

    A controllable phi qualifies through an open conjunct u - phi in
    [0, y] and reacts to its first justifying u.
    """
    live = set(outcomes.certain) | set(outcomes.possible)
    trigger: dict[Timepoint, Timepoint] = {}
    for d in node.constraints:
        for c in d.conjuncts:
            if c.unary or c.iv.lo != ZERO:
                continue
            if c.v in live and c.vi.kind is Kind.CONTROLLABLE and c.vi not in node.scheduled:
                trigger.setdefault(c.vi, c.v)
    phis = sorted(trigger, key=lambda p: p.index)
    strategies = []
    for k in range(len(phis) + 1):
        for subset in itertools.combinations(phis, k):
            plan: dict[Timepoint, list[Timepoint]] = {}
            for phi in subset:
                plan.setdefault(trigger[phi], []).append(phi)
            strategies.append({u: tuple(ps) for u, ps in plan.items()})
    return strategies


# --- verdicts ------------------------------------------------------------

@dataclass
class SolveStats:
    nodes_expanded: int = 0
    waits_taken: int = 0
    dtn_calls: int = 0
    wall_time: float = 0.0


@dataclass(frozen=True)
class Verdict:
    outcome: str  # "rtdc" | "not_rtdc" | "timeout"
    strategy: Optional[object]  # strategy.StrategyNode when rtdc
    stats: SolveStats

    @property
    def is_rtdc(self) -> bool:
        return self.outcome == "rtdc"


@dataclass
class SolveConfig:
    timeout: Optional[float] = None
    max_nodes: Optional[int] = None  # deterministic budget, counted per expansion
    heuristic: Optional[object] = None  # heuristic.HeuristicProvider
    heuristic_max_dor_depth: int = 15
    symmetry_pruning: bool = True
    transposition: bool = True  # reuse verdicts of states seen along other paths
    root_restrict: Optional[str] = None  # timepoint id or WAIT_ACTION
    extract_strategy: bool = True


@dataclass
class _Ctx:
    dtnu: Dtnu
    config: SolveConfig
    stats: SolveStats
    deadline: Optional[float]
    memo: dict = field(default_factory=dict)
    wait_cache: dict = field(default_factory=dict)
    heuristic_broken: bool = False


# --- truth propagation ----------------------------------------------------

def _set_truth(node: TreeNode, value: bool):
    assert node.truth is None, "truth is assigned exactly once"
    node.truth = value


def propagate_truth(node: TreeNode):
    """Push a freshly assigned truth value upward until it stops binding."""
    beta = node.truth
    parent = node.parent
    if parent is None or parent.truth is not None:
        return
    if isinstance(parent, (DtnuNode, WaitNode)):
        _set_truth(parent, beta)
        propagate_truth(parent)
    elif isinstance(parent, (DOrNode, WOrNode)):
        if beta:
            _set_truth(parent, True)
            propagate_truth(parent)
        elif parent.exhausted and all(c.truth is False for c in parent.children):
            _set_truth(parent, False)
            propagate_truth(parent)
    else:  # AndNode
        if not beta:
            _set_truth(parent, False)
            propagate_truth(parent)
        elif parent.exhausted and all(c.truth is True for c in parent.children):
            _set_truth(parent, True)
            propagate_truth(parent)


def truth_check_skip(node: TreeNode) -> bool:
    return node.parent is not None and node.parent.truth is not None


# --- constraint upkeep -----------------------------------------------------

def _expire_pending_uncontrollables(constraints, now):
    """Unary conjuncts on still-pending uncontrollables whose upper bound has
    passed can never hold: any future occurrence window starts at or after
    now.  Search-level pruning; keeps refutations shallow."""

    def rewrite(c):
        if c.unary and c.v.kind is Kind.UNCONTROLLABLE and now > c.iv.hi:
            return _FALSE
        return c

    return _apply(constraints, rewrite)


# --- node construction ------------------------------------------------------

def _schedule_child(dor: DOrNode, tp: Timepoint, ctx: _Ctx) -> Optional[DtnuNode]:
    base: DtnuNode = dor.parent
    combo = base.since_wait | {tp}
    if ctx.config.symmetry_pruning:
        if combo in base.session:
            return None
        base.session.add(combo)
    rec = ExecutionRecord(tp, Exact(base.now))
    status = propagate_exact(base.constraints, tp, base.now)
    if not status.violated:
        status = expire_unary(status.updated, base.now)
    if not status.violated:
        status = _expire_pending_uncontrollables(status.updated, base.now)
    scheduled = dict(base.scheduled)
    scheduled[tp] = rec
    activated = dict(base.activated)
    for link in ctx.dtnu.link_by_trigger.get(tp, ()):
        if link.target not in base.occurred:
            activated[link.target] = activation_windows(link, rec)
    child = DtnuNode(
        parent=dor,
        now=base.now,
        scheduled=scheduled,
        occurred=base.occurred,
        activated=activated,
        constraints=status.updated,
        since_wait=combo,
        session=base.session,
        action=("schedule", tp),
    )
    if status.violated:
        _set_truth(child, False)
    return child


def _outcome_child(andn: AndNode, combo: frozenset[Timepoint], ctx: _Ctx) -> DtnuNode:
    base = andn.base
    new_now = base.now + andn.delta
    occ_windows = andn.wor.occ_windows

    executed: list[tuple[Timepoint, Interval]] = []
    reactive_pairs: set[tuple[Timepoint, Timepoint]] = set()
    occurred = dict(base.occurred)
    scheduled = dict(base.scheduled)
    for u in sorted(combo, key=lambda u: u.index):
        window = occ_windows[u]
        occurred[u] = ExecutionRecord(u, Bounded(window))
        executed.append((u, window))
        for phi in andn.reactive.get(u, ()):
            if phi not in scheduled:
                scheduled[phi] = ExecutionRecord(phi, Bounded(window))
                reactive_pairs.add((u, phi))
                executed.append((phi, window))

    frozen_pairs = frozenset(reactive_pairs)
    constraints = base.constraints
    violated = False
    for tp, window in executed:
        status = propagate_bounded(constraints, tp, window, frozen_pairs)
        if status.violated:
            violated = True
            constraints = ()
            break
        constraints = status.updated
    if not violated:
        status = expire_unary(constraints, new_now)
        violated, constraints = status.violated, status.updated
    if not violated:
        status = _expire_pending_uncontrollables(constraints, new_now)
        violated, constraints = status.violated, status.updated

    activated: ActivationSet = {}
    for u, windows in base.activated.items():
        if u in combo:
            continue
        clipped = []
        for w in windows:
            if w.hi < new_now:
                continue
            clipped.append(Interval(max(w.lo, new_now), w.hi))
        if not clipped:
            # the occurrence model cannot place u anymore (its windows fell
            # inside waits it was never enumerated for); close the branch
            violated = True
            constraints = ()
            break
        activated[u] = tuple(clipped)
    for tp, window in executed:
        if tp.kind is Kind.CONTROLLABLE:
            for link in ctx.dtnu.link_by_trigger.get(tp, ()):
                if link.target not in occurred:
                    activated[link.target] = activation_windows(link, scheduled[tp])

    child = DtnuNode(
        parent=andn,
        now=new_now,
        scheduled=scheduled,
        occurred=occurred,
        activated=activated,
        constraints=constraints,
        since_wait=frozenset(),
        session=set(),
        action=("outcome", combo),
    )
    if violated:
        _set_truth(child, False)
    return child


# --- leaf handling -----------------------------------------------------------

def leaf_check(node: DtnuNode, ctx: _Ctx) -> Optional[bool]:
    """True/False when the node closes the problem, None when search continues.

    Constraint violations are resolved at node construction; here a node is
    a leaf when everything has executed, or when only controllables remain
    and the residual problem is a plain DTN.
    """
    all_scheduled = len(node.scheduled) == len(ctx.dtnu.controllables)
    all_occurred = len(node.occurred) == len(ctx.dtnu.uncontrollables)
    if all_scheduled and all_occurred:
        assert not node.constraints, "fully executed node left open conjuncts"
        return True
    if all_occurred:
        remaining = tuple(a for a in ctx.dtnu.controllables if a not in node.scheduled)
        floor = tuple(
            Disjunct((Conjunct(a, Interval(node.now, INF)),)) for a in remaining
        )
        ctx.stats.dtn_calls += 1
        try:
            witness = dtn.solve_dtn(
                dtn.DtnProblem(remaining, node.constraints + floor), ctx.deadline
            )
        except dtn.BudgetExhausted:
            raise SearchTimeout from None
        if witness is None:
            return False
        node.leaf_schedule = witness
        return True
    return None


# --- exploration ---------------------------------------------------------------

def _check_deadline(ctx: _Ctx):
    if ctx.deadline is not None and time.monotonic() > ctx.deadline:
        raise SearchTimeout
    if ctx.config.max_nodes is not None and ctx.stats.nodes_expanded > ctx.config.max_nodes:
        raise SearchTimeout


def _explore(node: TreeNode, ctx: _Ctx):
    ctx.stats.nodes_expanded += 1
    _check_deadline(ctx)
    if truth_check_skip(node):
        return
    if isinstance(node, DtnuNode):
        _explore_dtnu(node, ctx)
    elif isinstance(node, DOrNode):
        _explore_dor(node, ctx)
    elif isinstance(node, WaitNode):
        _explore_wait(node, ctx)
    elif isinstance(node, WOrNode):
        _explore_wor(node, ctx)
    else:
        _explore_and(node, ctx)


def _state_key(node: DtnuNode):
    """Everything the subtree verdict can depend on.  Execution times of
    finished timepoints only reach the future through the rewritten
    constraints and the live activation windows, so they are not part
    of the key."""
    return (
        node.now,
        node.constraints,
        tuple(sorted((u.id, node.activated[u]) for u in node.activated)),
        frozenset(tp.id for tp in node.scheduled),
        frozenset(tp.id for tp in node.occurred),
    )


def _explore_dtnu(node: DtnuNode, ctx: _Ctx):
    if node.truth is not None:  # violated at construction: prune the subtree
        propagate_truth(node)
        return
    key = None
    if ctx.config.transposition:
        key = _state_key(node)
        hit = ctx.memo.get(key)
        if hit is not None:
            node.alias = hit
            _set_truth(node, hit.truth)
            propagate_truth(node)
            return
    verdict = leaf_check(node, ctx)
    if verdict is not None:
        _set_truth(node, verdict)
        propagate_truth(node)
        if key is not None:
            ctx.memo[key] = node
        return
    depth = 1
    cursor = node.parent
    while cursor is not None:
        if isinstance(cursor, DOrNode):
            depth = cursor.depth + 1
            break
        cursor = cursor.parent
    dor = DOrNode(node, depth)
    node.children.append(dor)
    _explore(dor, ctx)
    if key is not None and node.truth is not None:
        ctx.memo[key] = node


def _dor_plan(dor: DOrNode, ctx: _Ctx) -> list[object]:
    base: DtnuNode = dor.parent
    specs: list[object] = [
        ("schedule", a) for a in ctx.dtnu.controllables if a not in base.scheduled
    ]
    eligible = wait_eligible(base.constraints, base.activated)
    wait_spec = None
    if eligible:
        try:
            wait_spec = (
                "wait",
                wait_duration(base.now, base.constraints, base.activated, ctx.wait_cache),
            )
        except NoPositiveCandidate:
            wait_spec = None
    if wait_spec is not None:
        specs.append(wait_spec)
    if ctx.config.root_restrict is not None and dor.depth == 1:
        wanted = ctx.config.root_restrict
        specs = [
            s for s in specs
            if (s[0] == "wait" and wanted == WAIT_ACTION)
            or (s[0] == "schedule" and s[1].id == wanted)
        ]
        return specs
    specs = _heuristic_reorder(dor, specs, wait_spec is not None, ctx)
    return specs


def _heuristic_reorder(dor: DOrNode, specs: list, has_wait: bool, ctx: _Ctx) -> list:
    provider = ctx.config.heuristic
    if provider is None or ctx.heuristic_broken or dor.depth > ctx.config.heuristic_max_dor_depth:
        return specs
    from . import encode  # local import: encode is optional for plain search

    base: DtnuNode = dor.parent
    try:
        graph = encode.to_graph(base, ctx.dtnu)
        probs = provider.rank(graph)
        if probs is None:
            return specs
        probs = list(probs)
        if len(probs) != len(graph.active):
            raise ValueError(
                f"heuristic returned {len(probs)} values for {len(graph.active)} active nodes"
            )
    except Exception as exc:  # fall back to creation order, solver must survive
        log.warning("heuristic disabled after failure: %s", exc)
        ctx.heuristic_broken = True
        return specs
    n_sched = len(specs) - (1 if has_wait else 0)
    scored = list(zip(probs[:n_sched], range(n_sched)))
    ranked = sorted(scored, key=lambda pr: (-pr[0], pr[1]))
    out = [specs[i] for _, i in ranked]
    if has_wait:
        wait_prob = probs[-1]
        pos = sum(1 for p, _ in ranked if p >= wait_prob)
        out.insert(pos, specs[-1])
    return out


def _explore_dor(dor: DOrNode, ctx: _Ctx):
    base: DtnuNode = dor.parent
    for spec in _dor_plan(dor, ctx):
        if dor.truth is not None:
            break
        if spec[0] == "schedule":
            child = _schedule_child(dor, spec[1], ctx)
            if child is None:
                continue
        else:
            child = WaitNode(dor, base, spec[1].delta)
        dor.children.append(child)
        _explore(child, ctx)
    dor.exhausted = True
    if dor.truth is None:
        _set_truth(dor, False)
        propagate_truth(dor)


def _explore_wait(wait: WaitNode, ctx: _Ctx):
    ctx.stats.waits_taken += 1
    wor = WOrNode(wait, wait.base, wait.delta)
    wait.children.append(wor)
    _explore(wor, ctx)


def _explore_wor(wor: WOrNode, ctx: _Ctx):
    for reactive in enumerate_reactive(wor.base, wor.outcomes):
        if wor.truth is not None:
            break
        child = AndNode(wor, reactive)
        wor.children.append(child)
        _explore(child, ctx)
    wor.exhausted = True
    if wor.truth is None:
        _set_truth(wor, False)
        propagate_truth(wor)


def _explore_and(andn: AndNode, ctx: _Ctx):
    for combo in andn.wor.combos:
        if andn.truth is not None:
            break
        child = _outcome_child(andn, combo, ctx)
        andn.children.append(child)
        _explore(child, ctx)
    andn.exhausted = True
    if andn.truth is None:
        _set_truth(andn, True)
        propagate_truth(andn)


# --- entry point ------------------------------------------------------------------

def solve(dtnu: Dtnu, config: Optional[SolveConfig] = None) -> Verdict:
    """Decide reactive schedulability and synthesize a strategy tree.

    Returns an rtdc verdict carrying the extracted strategy, a not_rtdc
    verdict, or a timeout verdict when the budget runs out.
    """
    config = config or SolveConfig()
    report = validate(dtnu)
    if not report.ok:
        raise InvalidInput(report.issues)
    stats = SolveStats()
    deadline = time.monotonic() + config.timeout if config.timeout else None
    ctx = _Ctx(dtnu, config, stats, deadline)
    # fixed cap for rule-3 path sums: rewrites consume each conjunct at most
    # once, so no seed can sit farther than the total bound mass from now
    from fractions import Fraction as _F

    cap = _F(1)
    for d in dtnu.constraints:
        for c in d.conjuncts:
            for b in (c.iv.lo, c.iv.hi):
                if b.finite:
                    cap += abs(b.frac)
    for link in dtnu.links:
        for w in link.intervals:
            for b in (w.lo, w.hi):
                if b.finite:
                    cap += abs(b.frac)
    ctx.wait_cache["__cap__"] = cap
    root = DtnuNode(
        parent=None,
        now=ZERO,
        scheduled={},
        occurred={},
        activated={},
        constraints=dtnu.constraints,
        since_wait=frozenset(),
        session=set(),
        action="root",
    )
    start = time.monotonic()
    timed_out = False
    try:
        run_deep(lambda: _explore(root, ctx))
    except SearchTimeout:
        timed_out = True
    stats.wall_time = time.monotonic() - start

    if timed_out or root.truth is None:
        return Verdict("timeout", None, stats)
    if root.truth:
        strat = None
        if config.extract_strategy:
            from . import strategy

            strat = run_deep(lambda: strategy.extract(root))
        return Verdict("rtdc", strat, stats)
    return Verdict("not_rtdc", None, stats)
