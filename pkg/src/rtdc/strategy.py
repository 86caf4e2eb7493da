"""Reactive strategy trees: extraction from a solved search tree, execution
semantics, adversarial verification, and serialization.

A strategy node schedules a set of controllables at its start time, then
either closes the problem (optionally committing remaining controllables
to fixed future times) or waits over a window with a reactive plan,
with one child per combination of uncontrollables that may occur.

``verify`` is the repo's ground-truth oracle: it replays the tree
structurally, then simulates adversarial occurrence times (window
endpoints exhaustively plus seeded random interior draws) and evaluates
the *original* constraints under every induced full schedule.  It never
consults the solver's rewritten constraints.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional

from .core import (
    ActivationSet,
    Bounded,
    Dtnu,
    Exact,
    ExecutionRecord,
    Interval,
    Kind,
    TimeValue,
    Timepoint,
    ZERO,
    activation_windows,
    decimal_str,
    evaluate_disjunct,
)
from .search import DOrNode, DtnuNode, WaitNode, enumerate_outcomes


class MalformedTree(Exception):
    """A supposedly-true node lacks the true child the extraction needs."""


@dataclass
class StrategyNode:
    start: TimeValue
    schedule_now: dict[Timepoint, TimeValue]
    wait: Optional[Interval]
    reactive: dict[Timepoint, tuple[Timepoint, ...]]
    assumed_occurred: dict[Timepoint, Interval]
    children: list["StrategyNode"]
    leaf_schedule: dict[Timepoint, TimeValue]


# --- extraction -----------------------------------------------------------

def extract(root: DtnuNode) -> StrategyNode:
    """Strategy subtree of a solved search tree: the true child of every
    OR node, all children of every AND node.  Nodes the search resolved
    by state reuse share their extracted subtree structurally."""
    if root.truth is not True:
        raise MalformedTree("root is not true")
    return _extract(root, {}, {})


def _extract(node: DtnuNode, assumed: dict[Timepoint, Interval], protos: dict) -> StrategyNode:
    target = node.alias if node.alias is not None else node
    proto = protos.get(id(target))
    if proto is None:
        proto = _build(target, protos)
        protos[id(target)] = proto
    return replace(proto, assumed_occurred=assumed)


def _build(node: DtnuNode, protos: dict) -> StrategyNode:
    start = node.now
    schedule_now: dict[Timepoint, TimeValue] = {}
    cur = node
    while True:
        if cur.alias is not None:
            inner = _extract(cur, {}, protos)
            return StrategyNode(
                start, schedule_now | inner.schedule_now, inner.wait, inner.reactive,
                {}, inner.children, inner.leaf_schedule,
            )
        if cur.leaf_schedule is not None:
            leaf: dict[Timepoint, TimeValue] = {}
            for tp, t in cur.leaf_schedule.items():
                if t == cur.now:
                    schedule_now[tp] = t
                else:
                    leaf[tp] = t
            return StrategyNode(start, schedule_now, None, {}, {}, [], leaf)
        if not cur.children:
            return StrategyNode(start, schedule_now, None, {}, {}, [], {})
        dor = cur.children[0]
        if not isinstance(dor, DOrNode) or dor.truth is not True:
            raise MalformedTree(f"expected a true decision node under {cur.action}")
        picked = next((c for c in dor.children if c.truth is True), None)
        if picked is None:
            raise MalformedTree("true decision node has no true child")
        if isinstance(picked, DtnuNode):
            _, tp = picked.action
            schedule_now[tp] = cur.now
            cur = picked
            continue
        assert isinstance(picked, WaitNode)
        wor = picked.children[0]
        if wor.truth is not True:
            raise MalformedTree("true wait node has no true reactive child")
        andn = next((c for c in wor.children if c.truth is True), None)
        if andn is None:
            raise MalformedTree("true reactive choice node has no true child")
        children = []
        for oc in andn.children:
            if oc.truth is not True:
                raise MalformedTree("outcome child of a true AND node is not true")
            combo = oc.action[1]
            child_assumed = {u: oc.occurred[u].when.iv for u in sorted(combo, key=lambda u: u.index)}
            children.append(_extract(oc, child_assumed, protos))
        wait_iv = Interval(cur.now, cur.now + picked.delta)
        return StrategyNode(start, schedule_now, wait_iv, dict(andn.reactive), {}, children, {})


# --- verification -----------------------------------------------------------

@dataclass
class VerifyConfig:
    endpoint_exhaustive: bool = True
    random_samples: int = 1000
    seed: int = 0
    max_endpoint_combos: int = 10000


@dataclass(frozen=True)
class Violation:
    path: str
    assignment: dict[str, str]
    disjunct: str


@dataclass
class VerificationReport:
    structural_ok: bool
    structural_issues: list[str]
    samples_run: int
    skipped_samples: int
    violations: list[Violation]
    seed: int

    @property
    def valid(self) -> bool:
        return self.structural_ok and not self.violations


@dataclass
class _PathStep:
    wait: Interval
    occurred: list[Timepoint]
    fired: list[tuple[Timepoint, Timepoint]]  # (u, phi) reactions taken


@dataclass
class _Path:
    name: str
    exact_times: dict[Timepoint, TimeValue]
    steps: list[_PathStep]


def verify(strategy: StrategyNode, dtnu: Dtnu, cfg: Optional[VerifyConfig] = None) -> VerificationReport:
    cfg = cfg or VerifyConfig()
    issues: list[str] = []
    paths: list[_Path] = []
    from .search import run_deep

    run_deep(lambda: _walk(
        strategy,
        dtnu,
        expected_start=ZERO,
        scheduled={},
        occurred={},
        activated={},
        trail="root",
        exact_times={},
        steps=[],
        issues=issues,
        paths=paths,
    ))
    report = VerificationReport(not issues, issues, 0, 0, [], cfg.seed)
    if issues:
        return report
    rng = random.Random(cfg.seed)
    per_path_random = max(1, cfg.random_samples // max(1, len(paths)))
    for path in paths:
        _sample_path(path, dtnu, cfg, rng, per_path_random, report)
    return report


def _walk(node, dtnu, expected_start, scheduled, occurred, activated, trail, exact_times, steps, issues, paths):
    if node.start != expected_start:
        issues.append(f"{trail}: node starts at {node.start}, expected {expected_start}")
        return
    scheduled = dict(scheduled)
    activated = {u: w for u, w in activated.items()}
    exact_times = dict(exact_times)
    for tp, t in node.schedule_now.items():
        if tp.kind is not Kind.CONTROLLABLE:
            issues.append(f"{trail}: {tp.id} scheduled but not controllable")
        if tp in scheduled:
            issues.append(f"{trail}: {tp.id} scheduled twice")
        if t != node.start:
            issues.append(f"{trail}: {tp.id} scheduled at {t}, not at node start {node.start}")
        rec = ExecutionRecord(tp, Exact(t))
        scheduled[tp] = rec
        exact_times[tp] = t
        for link in dtnu.link_by_trigger.get(tp, ()):
            if link.target not in occurred:
                activated[link.target] = activation_windows(link, rec)

    if node.wait is None:
        for tp, t in node.leaf_schedule.items():
            if tp in scheduled:
                issues.append(f"{trail}: {tp.id} scheduled twice at leaf")
            if t < node.start:
                issues.append(f"{trail}: leaf time {t} for {tp.id} precedes {node.start}")
            scheduled[tp] = ExecutionRecord(tp, Exact(t))
            exact_times[tp] = t
        missing = [a.id for a in dtnu.controllables if a not in scheduled]
        if missing:
            issues.append(f"{trail}: leaf reached with unscheduled controllables {missing}")
        pending = [u.id for u in dtnu.uncontrollables if u not in occurred]
        if pending:
            issues.append(f"{trail}: leaf reached with pending uncontrollables {pending}")
        paths.append(_Path(trail, exact_times, steps))
        return

    if node.wait.lo != node.start:
        issues.append(f"{trail}: wait {node.wait} does not start at {node.start}")
        return
    delta = node.wait.hi - node.wait.lo
    if not delta > ZERO:
        issues.append(f"{trail}: wait duration must be positive, got {delta}")
        return
    for u, phis in node.reactive.items():
        for phi in phis:
            ok = any(
                (not c.unary) and c.v == u and c.vi == phi and c.iv.lo == ZERO
                for d in dtnu.constraints
                for c in d.conjuncts
            )
            if not ok:
                issues.append(f"{trail}: reaction {phi.id}<-{u.id} lacks a justifying conjunct")

    outcomes, combos, occ_windows = enumerate_outcomes(activated, node.wait.lo, delta)
    child_sets = [frozenset(c.assumed_occurred) for c in node.children]
    if sorted(child_sets, key=_combo_key) != sorted(combos, key=_combo_key):
        issues.append(
            f"{trail}: children cover {sorted(_combo_key(s) for s in child_sets)} "
            f"but the wait admits {sorted(_combo_key(s) for s in combos)}"
        )
        return
    for child in node.children:
        combo = frozenset(child.assumed_occurred)
        c_occurred = dict(occurred)
        c_scheduled = dict(scheduled)
        c_activated = {u: w for u, w in activated.items()}
        fired: list[tuple[Timepoint, Timepoint]] = []
        step_occ: list[Timepoint] = []
        for u in sorted(combo, key=lambda u: u.index):
            window = child.assumed_occurred[u]
            if window != occ_windows[u]:
                issues.append(
                    f"{trail}: assumed window {window} for {u.id} differs from derived {occ_windows[u]}"
                )
            c_occurred[u] = ExecutionRecord(u, Bounded(window))
            step_occ.append(u)
            del c_activated[u]
            for phi in node.reactive.get(u, ()):
                if phi in c_scheduled:
                    issues.append(f"{trail}: reaction re-executes scheduled {phi.id}")
                    continue
                rec = ExecutionRecord(phi, Bounded(window))
                c_scheduled[phi] = rec
                fired.append((u, phi))
                for link in dtnu.link_by_trigger.get(phi, ()):
                    if link.target not in c_occurred:
                        c_activated[link.target] = activation_windows(link, rec)
        dead = False
        for u, windows in list(c_activated.items()):
            clipped = tuple(
                Interval(max(w.lo, node.wait.hi), w.hi) for w in windows if w.hi >= node.wait.hi
            )
            if not clipped:
                issues.append(f"{trail}: {u.id} can no longer occur after {node.wait}")
                dead = True
            c_activated[u] = clipped
        if dead:
            continue
        step = _PathStep(node.wait, step_occ, fired)
        _walk(
            child,
            dtnu,
            expected_start=node.wait.hi,
            scheduled=c_scheduled,
            occurred=c_occurred,
            activated=c_activated,
            trail=f"{trail}/occ[{','.join(u.id for u in step_occ)}]",
            exact_times=exact_times,
            steps=steps + [step],
            issues=issues,
            paths=paths,
        )


def _combo_key(s: frozenset) -> tuple:
    return tuple(sorted(tp.id for tp in s))


def _feasible_pieces(u, wait, assign, dtnu) -> list[Interval]:
    """Concrete occurrence windows of u inside the wait, given the trigger's
    concrete execution time chosen so far."""
    link = dtnu.link_by_target[u]
    t = assign.get(link.trigger)
    if t is None:
        return []
    pieces = []
    for w in link.intervals:
        shifted = w.shift(t)
        cut = shifted.intersect(wait)
        if cut is not None:
            pieces.append(cut)
    return pieces


def _evaluate(path, assign, dtnu, report):
    for d in dtnu.constraints:
        if not evaluate_disjunct(d, assign):
            report.violations.append(
                Violation(
                    path.name,
                    {tp.id: str(t) for tp, t in sorted(assign.items(), key=lambda kv: kv[0].id)},
                    str(d),
                )
            )


def _sample_path(path, dtnu, cfg, rng, n_random, report):
    occ_list: list[tuple[Timepoint, Interval, list[tuple[Timepoint, Timepoint]]]] = []
    for step in path.steps:
        for u in step.occurred:
            occ_list.append((u, step.wait, step.fired))

    def place(assign, u, value, fired):
        assign[u] = value
        for trig, phi in fired:
            if trig == u:
                assign[phi] = value

    if cfg.endpoint_exhaustive:
        budget = [cfg.max_endpoint_combos]

        def rec(i, assign):
            if budget[0] <= 0:
                return
            if i == len(occ_list):
                budget[0] -= 1
                report.samples_run += 1
                _evaluate(path, assign, dtnu, report)
                return
            u, wait, fired = occ_list[i]
            pieces = _feasible_pieces(u, wait, assign, dtnu)
            if not pieces:
                report.skipped_samples += 1
                return
            for piece in pieces:
                ends = [piece.lo] if piece.lo == piece.hi else [piece.lo, piece.hi]
                for value in ends:
                    nxt = dict(assign)
                    place(nxt, u, value, fired)
                    rec(i + 1, nxt)

        rec(0, dict(path.exact_times))

    denom = 10**6
    for _ in range(n_random):
        assign = dict(path.exact_times)
        ok = True
        for u, wait, fired in occ_list:
            pieces = _feasible_pieces(u, wait, assign, dtnu)
            if not pieces:
                report.skipped_samples += 1
                ok = False
                break
            piece = pieces[rng.randrange(len(pieces))]
            frac = Fraction(rng.randrange(denom + 1), denom)
            place(assign, u, _lerp(piece, frac), fired)
        if ok:
            report.samples_run += 1
            _evaluate(path, assign, dtnu, report)


def _lerp(piece: Interval, frac: Fraction) -> TimeValue:
    width = piece.hi - piece.lo
    return TimeValue(piece.lo.as_fraction() + width.as_fraction() * frac)


# --- rendering ----------------------------------------------------------------

def _fmt_fixed(t: TimeValue) -> str:
    dec = decimal_str(t.as_fraction())
    if dec is None:
        return str(t)
    if "." not in dec:
        return dec + ".00"
    whole, frac = dec.split(".")
    return f"{whole}.{frac.ljust(2, '0')}"


def render_text(strategy: StrategyNode) -> str:
    lines: list[str] = []
    _render(strategy, 0, lines)
    return "\n".join(lines)


def _render(node: StrategyNode, depth: int, lines: list[str]):
    pad = "  " * depth
    if node.schedule_now:
        ids = ", ".join(tp.id for tp in node.schedule_now)
        lines.append(f"{pad}Schedule [{ids}] at current time t = {_fmt_fixed(node.start)},")
    if node.wait is not None:
        delta = node.wait.hi - node.wait.lo
        plan = ", ".join(
            f"{u.id}: [{', '.join(p.id for p in phis)}]" for u, phis in node.reactive.items()
        )
        lines.append(
            f"{pad}Wait {delta} units at current time t = {_fmt_fixed(node.wait.lo)} "
            f"with reactive strategy: {{{plan}}},"
        )
        for child in node.children:
            ids = ", ".join(u.id for u in child.assumed_occurred)
            lines.append(f"{pad}If these points occurred: [{ids}]")
            _render(child, depth + 1, lines)
    else:
        for tp, t in node.leaf_schedule.items():
            lines.append(f"{pad}Schedule {tp.id} at given time: [{t}, {t}]")
        lines.append(f"{pad}Problem solved")


# --- serialization ---------------------------------------------------------------

def to_payload(node: StrategyNode) -> dict:
    out = {
        "start": str(node.start),
        "schedule": {tp.id: str(t) for tp, t in node.schedule_now.items()},
        "wait": [str(node.wait.lo), str(node.wait.hi)] if node.wait else None,
        "reactive": {u.id: [p.id for p in phis] for u, phis in node.reactive.items()},
        "children": [
            {
                "assumed": {u.id: [str(w.lo), str(w.hi)] for u, w in c.assumed_occurred.items()},
                "node": to_payload(c),
            }
            for c in node.children
        ],
        "leaf_schedule": {tp.id: str(t) for tp, t in node.leaf_schedule.items()},
    }
    return out


def from_payload(data: dict, dtnu: Dtnu) -> StrategyNode:
    from .core import tv, Interval as Iv

    def tp(i: str) -> Timepoint:
        return dtnu.by_id[i]

    def build(d: dict, assumed: dict) -> StrategyNode:
        wait = Iv(tv(d["wait"][0]), tv(d["wait"][1])) if d.get("wait") else None
        children = []
        for c in d.get("children", []):
            child_assumed = {
                tp(u): Iv(tv(w[0]), tv(w[1])) for u, w in c["assumed"].items()
            }
            children.append(build(c["node"], child_assumed))
        return StrategyNode(
            start=tv(d["start"]),
            schedule_now={tp(i): tv(t) for i, t in d.get("schedule", {}).items()},
            wait=wait,
            reactive={tp(u): tuple(tp(p) for p in ps) for u, ps in d.get("reactive", {}).items()},
            assumed_occurred=assumed,
            children=children,
            leaf_schedule={tp(i): tv(t) for i, t in d.get("leaf_schedule", {}).items()},
        )

    return build(data, {})
