import random

import pytest

from rtdc import scenarios
from rtdc.core import ContingencyLink, Dtnu, iv, tv
from rtdc.search import (
    AndNode,
    DOrNode,
    DtnuNode,
    InvalidInput,
    SolveConfig,
    SolveStats,
    TreeNode,
    WaitNode,
    WOrNode,
    _Ctx,
    _dor_plan,
    _schedule_child,
    enumerate_outcomes,
    enumerate_reactive,
    leaf_check,
    propagate_truth,
    solve,
    truth_check_skip,
)
from conftest import binary, ctrl, disj, unary, unc


def make_ctx(dtnu, **kw):
    return _Ctx(dtnu, SolveConfig(**kw), SolveStats(), None)


def root_node(dtnu):
    return DtnuNode(
        parent=None, now=tv(0), scheduled={}, occurred={}, activated={},
        constraints=dtnu.constraints, since_wait=frozenset(), session=set(),
        action="root",
    )


class TestSolveExamples:
    def test_single_controllable_solves_at_zero(self):
        verdict = solve(scenarios.single_controllable())
        assert verdict.outcome == "rtdc"
        (a, t), = verdict.strategy.schedule_now.items()
        assert a.id == "a" and t == tv(0)

    def test_perroquet_schedules_first_maneuver_at_fifteen(self):
        verdict = solve(scenarios.perroquet(3))
        assert verdict.outcome == "rtdc"
        found = {}

        def collect(node):
            found.update(node.schedule_now)
            for c in node.children:
                collect(c)

        collect(verdict.strategy)
        a1 = next(tp for tp in found if tp.id == "a1")
        assert found[a1] == tv(15)

    def test_fixed_offset_is_not_solvable(self):
        assert solve(scenarios.fixed_offset_after_occurrence()).outcome == "not_rtdc"

    def test_invalid_network_rejected(self):
        (a,) = ctrl("a")
        (u,) = unc("u")
        with pytest.raises(InvalidInput):
            solve(Dtnu((a,), (u,), (), ()))

    def test_timeout_verdict(self):
        from rtdc import gen

        hard = gen.generate(gen.GenParams(seed=1000))
        verdict = solve(hard, SolveConfig(timeout=0.05))
        assert verdict.outcome == "timeout"
        assert verdict.strategy is None


class TestDecisionPlan:
    def test_two_schedule_children_without_wait(self):
        a, b = ctrl("a", "b")
        dtnu = Dtnu((a, b), (), (disj(binary(b, a, 0, 10)),), ())
        node = root_node(dtnu)
        specs = _dor_plan(DOrNode(node, 1), make_ctx(dtnu))
        assert [s for s in specs if s[0] == "schedule"] == [("schedule", a), ("schedule", b)]
        assert not any(s[0] == "wait" for s in specs)

    def test_wait_spec_appended_last_when_eligible(self):
        (a,) = ctrl("a")
        dtnu = scenarios.single_controllable()
        node = root_node(dtnu)
        specs = _dor_plan(DOrNode(node, 1), make_ctx(dtnu))
        assert specs[-1][0] == "wait" and specs[-1][1].delta == tv(10)

    def test_violated_schedule_child_is_closed_at_creation(self):
        (a,) = ctrl("a")
        dtnu = Dtnu((a,), (), (disj(unary(a, 5, 6)),), ())
        node = root_node(dtnu)
        ctx = make_ctx(dtnu)
        dor = DOrNode(node, 1)
        child = _schedule_child(dor, a, ctx)
        assert child.truth is False and child.children == []

    def test_symmetry_skips_retested_combination(self):
        a, b = ctrl("a", "b")
        dtnu = Dtnu((a, b), (), (disj(binary(b, a, 0, 10)),), ())
        node = root_node(dtnu)
        ctx = make_ctx(dtnu)
        dor = DOrNode(node, 1)
        first = _schedule_child(dor, a, ctx)
        assert first is not None
        nested = _schedule_child(DOrNode(first, 2), b, ctx)  # tests {a, b}
        assert nested is not None
        second = _schedule_child(dor, b, ctx)  # tests {b}: fresh
        assert second is not None
        again = _schedule_child(DOrNode(second, 2), a, ctx)  # {a, b} again
        assert again is None

    def test_symmetry_prune_reduces_work_not_verdicts(self):
        a, b, c = ctrl("a", "b", "c")
        (u,) = unc("u")
        dtnu = Dtnu(
            (a, b, c),
            (u,),
            (disj(binary(c, u, 1, 1)),),
            (ContingencyLink(a, (iv(1, 2),), u),),
        )
        pruned = solve(dtnu, SolveConfig(symmetry_pruning=True))
        full = solve(dtnu, SolveConfig(symmetry_pruning=False))
        assert pruned.outcome == full.outcome == "not_rtdc"
        assert pruned.stats.nodes_expanded <= full.stats.nodes_expanded


class TestOutcomeEnumeration:
    def test_certain_and_possible_split(self):
        u1, u2 = unc("u1", "u2")
        sets, combos, occ = enumerate_outcomes(
            {u1: (iv(2, 10),), u2: (iv(1, 4),)}, tv(0), tv(5)
        )
        assert sets.certain == (u2,) and sets.possible == (u1,)
        assert combos == [frozenset({u2}), frozenset({u2, u1})]
        assert occ[u1] == iv(2, 5) and occ[u2] == iv(1, 4)

    def test_no_overlap_single_combo(self):
        (u,) = unc("u")
        sets, combos, occ = enumerate_outcomes({u: (iv(6, 9),)}, tv(0), tv(5))
        assert sets.certain == () and sets.possible == ()
        assert combos == [frozenset()]
        assert occ == {}

    def test_both_certain(self):
        u1, u2 = unc("u1", "u2")
        sets, combos, _ = enumerate_outcomes(
            {u1: (iv(1, 2),), u2: (iv(3, 4),)}, tv(0), tv(10)
        )
        assert sets.certain == (u1, u2) and combos == [frozenset({u1, u2})]


class TestReactiveEnumeration:
    def make_node(self, constraints):
        a1, a2, a3 = ctrl("a1", "a2", "a3")
        return DtnuNode(
            parent=None, now=tv(0), scheduled={}, occurred={}, activated={},
            constraints=constraints, since_wait=frozenset(), session=set(),
        )

    def test_power_set_of_reactables(self):
        a1, a2, a3 = ctrl("a1", "a2", "a3")
        (u1,) = unc("u1")
        node = self.make_node((disj(binary(u1, a2, 0, 3)), disj(binary(u1, a3, 0, 1))))
        from rtdc.search import OutcomeSets

        strategies = enumerate_reactive(node, OutcomeSets((), (u1,)))
        assert strategies == [
            {},
            {u1: (a2,)},
            {u1: (a3,)},
            {u1: (a2, a3)},
        ]

    def test_no_candidates_yields_empty_strategy_only(self):
        node = self.make_node(())
        from rtdc.search import OutcomeSets

        assert enumerate_reactive(node, OutcomeSets((), ())) == [{}]

    def test_reaction_required_instance_needs_reactive_branch(self):
        dtnu = scenarios.reaction_required()
        verdict = solve(dtnu)
        assert verdict.outcome == "rtdc"

        reactive_used = []

        def walk(node):
            reactive_used.extend(node.reactive.items())
            for c in node.children:
                walk(c)

        walk(verdict.strategy)
        assert any(phis for _, phis in reactive_used)


class TestTruthPropagation:
    def test_or_chain_to_root(self):
        root = DtnuNode.__new__(DtnuNode)
        TreeNode.__init__(root, None)
        dor = DOrNode.__new__(DOrNode)
        TreeNode.__init__(dor, root)
        dor.depth, dor.exhausted = 1, False
        leaf = TreeNode(dor)
        root.children, dor.children = [dor], [leaf]
        leaf.truth = True
        propagate_truth(leaf)
        assert dor.truth is True and root.truth is True

    def test_and_waits_for_all_children(self):
        wor = WOrNode.__new__(WOrNode)
        TreeNode.__init__(wor, None)
        wor.exhausted = False
        andn = AndNode.__new__(AndNode)
        TreeNode.__init__(andn, wor)
        andn.exhausted = False
        first, second = TreeNode(andn), TreeNode(andn)
        andn.children = [first, second]
        first.truth = True
        propagate_truth(first)
        assert andn.truth is None  # stops: a sibling is still unknown
        andn.exhausted = True
        second.truth = True
        propagate_truth(second)
        assert andn.truth is True

    def test_and_fails_fast(self):
        andn = AndNode.__new__(AndNode)
        TreeNode.__init__(andn, None)
        andn.exhausted = False
        child = TreeNode(andn)
        andn.children = [child]
        child.truth = False
        propagate_truth(child)
        assert andn.truth is False


class TestLeafCheck:
    def test_all_executed_is_true(self):
        dtnu = scenarios.single_controllable()
        (a,) = dtnu.controllables
        from rtdc.core import Exact, ExecutionRecord

        node = DtnuNode(
            parent=None, now=tv(0),
            scheduled={a: ExecutionRecord(a, Exact(tv(0)))},
            occurred={}, activated={}, constraints=(),
            since_wait=frozenset(), session=set(),
        )
        assert leaf_check(node, make_ctx(dtnu)) is True

    def test_residual_plain_network_infeasible(self):
        a, b = ctrl("a", "b")
        dtnu = Dtnu((a, b), (), (disj(unary(b, 5, 6)),), ())
        from rtdc.core import Exact, ExecutionRecord

        node = DtnuNode(
            parent=None, now=tv(7),
            scheduled={a: ExecutionRecord(a, Exact(tv(0)))},
            occurred={}, activated={}, constraints=(disj(unary(b, 5, 6)),),
            since_wait=frozenset(), session=set(),
        )
        ctx = make_ctx(dtnu)
        assert leaf_check(node, ctx) is False
        assert ctx.stats.dtn_calls == 1

    def test_pending_uncontrollable_is_not_a_leaf(self):
        dtnu = scenarios.fixed_offset_after_occurrence()
        node = root_node(dtnu)
        assert leaf_check(node, make_ctx(dtnu)) is None


class TestTruthCheckSkip:
    def test_resolved_parent_skips(self):
        parent = TreeNode(None)
        child = TreeNode(parent)
        parent.truth = True
        assert truth_check_skip(child)

    def test_unknown_parent_explores(self):
        parent = TreeNode(None)
        child = TreeNode(parent)
        assert not truth_check_skip(child)

    def test_root_explores(self):
        assert not truth_check_skip(TreeNode(None))


def audit_tree(node):
    """Assigned internal truths must be consistent with children (state-reuse
    nodes act as leaves)."""
    if isinstance(node, DtnuNode) and node.alias is not None:
        assert node.truth == node.alias.truth
        return
    for child in node.children:
        audit_tree(child)
    kids = [c.truth for c in node.children]
    if isinstance(node, (DOrNode, WOrNode)) and node.truth is True and kids:
        assert True in kids
    if isinstance(node, (DOrNode, WOrNode)) and node.truth is False:
        assert all(k is False for k in kids)
    if isinstance(node, AndNode):
        if node.truth is True:
            assert kids and all(k is True for k in kids)
        if node.truth is False:
            assert False in kids
    if isinstance(node, (DtnuNode, WaitNode)) and kids and node.truth is not None:
        if not isinstance(node, DtnuNode) or node.children:
            assert node.truth in kids or node.leaf_schedule is not None


def test_small_instances_terminate_and_audit_clean():
    from rtdc import gen

    rng = random.Random(5)
    for k in range(25):
        params = gen.GenParams(
            controllables_range=(2, 4), uncontrollables_range=(1, 2), seed=900 + k
        )
        dtnu = gen.generate(params)
        verdict = solve(dtnu, SolveConfig(timeout=20.0))
        assert verdict.outcome in ("rtdc", "not_rtdc")


def test_statically_satisfiable_networks_are_never_refused():
    """One-sided oracle: when some fixed grid schedule satisfies every
    disjunct of an uncontrollable-free network, the solver must not refuse."""
    import itertools

    rng = random.Random(11)
    points = ctrl("a", "b", "c")
    checked = 0
    for _ in range(40):
        constraints = []
        for _ in range(rng.randint(1, 3)):
            conjuncts = []
            for _ in range(rng.randint(1, 2)):
                v = rng.choice(points)
                lo = rng.randint(0, 8)
                hi = lo + rng.randint(0, 4)
                if rng.random() < 0.5:
                    conjuncts.append(unary(v, lo, hi))
                else:
                    vi = rng.choice([p for p in points if p != v])
                    conjuncts.append(binary(v, vi, lo - 6, hi - 3))
            constraints.append(disj(*conjuncts))
        dtnu = Dtnu(points, (), tuple(constraints), ())
        grid_ok = any(
            all(
                any(
                    (c.vi is None and c.iv.contains(tv(t[c.v.index])))
                    or (c.vi is not None and c.iv.contains(tv(t[c.v.index] - t[c.vi.index])))
                    for c in d.conjuncts
                )
                for d in constraints
            )
            for t in itertools.product(range(13), repeat=3)
        )
        if grid_ok:
            checked += 1
            assert solve(dtnu).outcome == "rtdc"
    assert checked >= 10


def test_truth_audit_on_solved_tree():
    dtnu = scenarios.perroquet(2)
    report = solve(dtnu)  # strategy extraction exercises the tree too
    assert report.outcome == "rtdc"

    # re-run keeping the tree: drive internals directly
    from rtdc.search import _Ctx, _explore

    ctx = _Ctx(dtnu, SolveConfig(), SolveStats(), None)
    root = root_node(dtnu)
    _explore(root, ctx)
    assert root.truth is True
    audit_tree(root)
