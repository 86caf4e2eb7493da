from fractions import Fraction

from rtdc import scenarios
from rtdc.core import Kind, validate
from rtdc.gen import GenParams, generate, label_root_decisions


class TestGenerate:
    def test_deterministic_per_seed(self):
        a = generate(GenParams(seed=7))
        b = generate(GenParams(seed=7))
        assert a == b
        assert generate(GenParams(seed=8)) != a

    def test_ranges_are_covered(self):
        seen_n1, seen_n2 = set(), set()
        for seed in range(1000):
            params = GenParams(seed=seed)
            d = generate(params)
            n1, n2 = len(d.controllables), len(d.uncontrollables)
            assert 10 <= n1 <= 20 and 1 <= n2 <= 3
            seen_n1.add(n1)
            seen_n2.add(n2)
        assert seen_n1 == set(range(10, 21))
        assert seen_n2 == {1, 2, 3}

    def test_every_timepoint_is_mentioned(self):
        for seed in range(50):
            d = generate(GenParams(seed=seed))
            mentioned = set()
            for l in d.links:
                mentioned.add(l.trigger)
                mentioned.add(l.target)
            for dd in d.constraints:
                for c in dd.conjuncts:
                    mentioned.add(c.v)
                    if c.vi is not None:
                        mentioned.add(c.vi)
            assert mentioned >= set(d.controllables) | set(d.uncontrollables)

    def test_structurally_valid_and_two_decimal_bounds(self):
        d = generate(GenParams(seed=3))
        assert validate(d).ok
        for dd in d.constraints:
            for c in dd.conjuncts:
                for bound in (c.iv.lo, c.iv.hi):
                    assert Fraction(0) <= bound.as_fraction() <= Fraction(100)
                    assert bound.as_fraction().denominator in (1, 2, 4, 5, 10, 20, 25, 50, 100)

    def test_distinct_triggers(self):
        for seed in range(30):
            d = generate(GenParams(seed=seed))
            triggers = [l.trigger for l in d.links]
            assert len(triggers) == len(set(triggers))


class TestLabels:
    def test_solvable_first_decision_labeled_one(self):
        d = scenarios.single_controllable()
        ex = label_root_decisions(d, nu=1, tau=1.0, seed=0)
        assert len(ex.labels) == len(d.controllables) + 1
        assert ex.labels[0] == 1

    def test_unsolvable_instance_all_zero(self):
        d = scenarios.fixed_offset_after_occurrence()
        ex = label_root_decisions(d, nu=2, tau=1.0, seed=0)
        assert set(ex.labels) == {0}

    def test_label_vector_matches_active_nodes(self):
        d = generate(GenParams(controllables_range=(3, 4), uncontrollables_range=(1, 1), seed=5))
        ex = label_root_decisions(d, nu=1, tau=0.05, seed=1)
        assert len(ex.labels) == len(ex.graph.active)
        assert set(ex.labels) <= {0, 1}

    def test_labels_reproducible(self):
        d = generate(GenParams(controllables_range=(3, 3), uncontrollables_range=(1, 1), seed=11))
        a = label_root_decisions(d, nu=2, tau=0.2, seed=4)
        b = label_root_decisions(d, nu=2, tau=0.2, seed=4)
        assert a.labels == b.labels
