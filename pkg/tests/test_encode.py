from fractions import Fraction

import pytest

from rtdc import scenarios
from rtdc.core import ContingencyLink, Dtnu, iv, tv
from rtdc.encode import (
    EDGE_FEATURES,
    LAYOUT_VERSION,
    NODE_FEATURES,
    EncodedGraph,
    OutOfRange,
    distance_class,
    to_graph,
)
from conftest import binary, ctrl, disj, unary, unc


class TestDistanceClass:
    def test_bins(self):
        assert distance_class(Fraction(5, 100)) == 0
        assert distance_class(Fraction(9, 10)) == 9
        assert distance_class(Fraction(0)) == 0
        assert distance_class(Fraction(1)) == 9  # top bin is closed
        assert distance_class(Fraction(1, 2)) == 5

    def test_out_of_range_rejected(self):
        with pytest.raises(OutOfRange):
            distance_class(Fraction(-1, 10))
        with pytest.raises(OutOfRange):
            distance_class(Fraction(11, 10))


class TestToGraph:
    def test_node_count_small_example(self):
        # 2 controllables + 1 uncontrollable + 1 intermediary (two-conjunct
        # disjunct) + wait = 5 nodes; the one-interval link adds none
        a, b = ctrl("a", "b")
        (u,) = unc("u")
        dtnu = Dtnu(
            (a, b),
            (u,),
            (disj(unary(a, 0, 10), binary(b, u, 1, 2)),),
            (ContingencyLink(a, (iv(1, 2),), u),),
        )
        graph = to_graph(dtnu)
        assert len(graph.node_ids) == 5
        kinds = [f.index(1) for f in graph.node_features]
        assert kinds.count(0) == 2 and kinds.count(1) == 1
        assert kinds.count(2) == 1 and kinds.count(3) == 1

    def test_active_nodes_are_controllables_then_wait(self):
        dtnu = scenarios.perroquet(3)
        graph = to_graph(dtnu)
        names = [graph.node_ids[i] for i in graph.active]
        assert names == ["a1", "a2", "a3", "__wait__"]

    def test_features_are_one_hot(self):
        graph = to_graph(scenarios.perroquet(3))
        assert all(set(f) <= {0, 1} and len(f) == NODE_FEATURES for f in graph.node_features)
        for _, _, feats in graph.edges:
            assert set(feats) <= {0, 1} and len(feats) == EDGE_FEATURES

    def test_deterministic(self):
        a = to_graph(scenarios.perroquet(3))
        b = to_graph(scenarios.perroquet(3))
        assert a == b

    def test_degenerate_all_zero_bounds_flagged(self):
        (a,) = ctrl("a")
        dtnu = Dtnu((a,), (), (disj(unary(a, 0, 0)),), ())
        graph = to_graph(dtnu)
        assert graph.degenerate

    def test_infinite_bound_maps_to_top_class(self):
        (a,) = ctrl("a")
        dtnu = Dtnu((a,), (), (disj(unary(a, 0, "inf")),), ())
        graph = to_graph(dtnu)
        wait = graph.node_ids.index("__wait__")
        av = graph.node_ids.index("a")
        upper = next(f for s, d, f in graph.edges if (s, d) == (wait, av))
        assert upper[9] == 1  # class 9 for the open bound

    def test_permutation_equivariance(self):
        a, b = ctrl("a", "b")
        (u,) = unc("u")
        base = Dtnu(
            (a, b), (u,),
            (disj(binary(b, a, 1, 2)), disj(unary(a, 0, 10)), disj(unary(u, 3, 7))),
            (ContingencyLink(a, (iv(1, 2),), u),),
        )
        b2, a2 = ctrl("b", "a")  # swapped input order, indices follow position
        swapped = Dtnu(
            (b2, a2), (u,),
            (disj(binary(b2, a2, 1, 2)), disj(unary(a2, 0, 10)), disj(unary(u, 3, 7))),
            (ContingencyLink(a2, (iv(1, 2),), u),),
        )
        g1, g2 = to_graph(base), to_graph(swapped)

        def canonical(g: EncodedGraph):
            order = sorted(range(len(g.node_ids)), key=lambda i: g.node_ids[i])
            rank = {old: new for new, old in enumerate(order)}
            nodes = tuple(g.node_features[i] for i in order)
            edges = tuple(sorted((rank[s], rank[d], f) for s, d, f in g.edges))
            return nodes, edges

        assert canonical(g1) == canonical(g2)

    def test_payload_round_trip(self):
        g = to_graph(scenarios.perroquet(2))
        assert EncodedGraph.from_payload(g.to_payload()) == g
        assert g.layout == LAYOUT_VERSION

    def test_mid_search_node_requires_network(self):
        from rtdc.search import DtnuNode

        node = DtnuNode(
            parent=None, now=tv(0), scheduled={}, occurred={}, activated={},
            constraints=(), since_wait=frozenset(), session=set(),
        )
        with pytest.raises(ValueError):
            to_graph(node)
