import random
from fractions import Fraction

from rtdc.core import Interval, evaluate_disjunct, iv, tv
from rtdc.propagation import expire_unary, propagate_bounded, propagate_exact
from conftest import binary, ctrl, disj, unary, unc


class TestPropagateExact:
    def test_binary_becomes_unary_on_other_endpoint(self):
        (a,) = ctrl("a")
        (v,) = unc("v")
        status = propagate_exact([disj(binary(v, a, 2, 4))], a, tv(3))
        assert not status.violated
        (d,) = status.updated
        (c,) = d.conjuncts
        assert c.unary and c.v == v and c.iv == iv(5, 7)

    def test_minuend_scheduling_mirrors(self):
        a, b = ctrl("a", "b")
        # a - b in [2, 4], schedule a at 10 => b in [6, 8]
        status = propagate_exact([disj(binary(a, b, 2, 4))], a, tv(10))
        (c,) = status.updated[0].conjuncts
        assert c.v == b and c.iv == iv(6, 8)

    def test_unary_out_of_window_violates(self):
        (a,) = ctrl("a")
        status = propagate_exact([disj(unary(a, 0, 10))], a, tv(12))
        assert status.violated
        assert status.updated == ()

    def test_satisfied_disjunct_dropped(self):
        (a,) = ctrl("a")
        status = propagate_exact([disj(unary(a, 0, 1), unary(a, 5, 9))], a, tv(6))
        assert not status.violated and status.updated == ()

    def test_untouched_disjuncts_pass_through(self):
        a, b = ctrl("a", "b")
        keep = disj(unary(b, 0, 5))
        status = propagate_exact([keep, disj(unary(a, 0, 5))], a, tv(1))
        assert status.updated == (keep,)


class TestPropagateBounded:
    def test_tight_bound_narrows(self):
        (u,) = unc("u")
        (v,) = ctrl("v")
        # v - u in [1, 5], u occurred within [0, 2] => v in [3, 5]
        status = propagate_bounded([disj(binary(v, u, 1, 5))], u, iv(0, 2))
        (c,) = status.updated[0].conjuncts
        assert c.unary and c.v == v and c.iv == iv(3, 5)

    def test_empty_tight_bound_is_false(self):
        (u,) = unc("u")
        (v,) = ctrl("v")
        # v - u in [1, 2], u within [0, 4]: 4+1 > 0+2
        status = propagate_bounded([disj(binary(v, u, 1, 2))], u, iv(0, 4))
        assert status.violated

    def test_reactive_pair_conjunct_satisfied(self):
        (u,) = unc("u")
        (phi,) = ctrl("phi")
        reactive = frozenset({(u, phi)})
        status = propagate_bounded(
            [disj(binary(u, phi, 0, 3))], u, iv(0, 2), reactive
        )
        assert not status.violated and status.updated == ()

    def test_non_zero_lower_bound_not_excepted(self):
        (u,) = unc("u")
        (phi,) = ctrl("phi")
        # u - phi in [3, 9] is not the coupling conjunct: tight rules apply
        status = propagate_bounded(
            [disj(binary(u, phi, 3, 9))], u, iv(0, 2), frozenset({(u, phi)})
        )
        (c,) = status.updated[0].conjuncts
        assert c.v == phi and c.iv == iv(tv(2) - tv(9), tv(0) - tv(3))

    def test_unary_requires_whole_window(self):
        (u,) = unc("u")
        inside = propagate_bounded([disj(unary(u, 0, 10))], u, iv(2, 3))
        assert not inside.violated and inside.updated == ()
        straddling = propagate_bounded([disj(unary(u, 0, 10))], u, iv(8, 12))
        assert straddling.violated
        disjoint = propagate_bounded([disj(unary(u, 0, 10))], u, iv(11, 12))
        assert disjoint.violated

    def test_same_wait_pair_resolves_by_sequential_folding(self):
        u1, u2 = unc("u1", "u2")
        # u2 - u1 in [-2, 2] holds for every pair drawn from [0, 2]
        first = propagate_bounded([disj(binary(u2, u1, -2, 2))], u1, iv(0, 2))
        final = propagate_bounded(first.updated, u2, iv(0, 2))
        assert not final.violated and final.updated == ()
        # u2 - u1 in [0, 5] fails the for-all reading (u2=0, u1=2 gives -2)
        first = propagate_bounded([disj(binary(u2, u1, 0, 5))], u1, iv(0, 2))
        assert propagate_bounded(first.updated, u2, iv(0, 2)).violated
        # u2 - u1 in [3, 4], both within [0, 2]: [2+3, 0+4] empty -> false
        tight = propagate_bounded([disj(binary(u2, u1, 3, 4))], u1, iv(0, 2))
        assert tight.violated


class TestExpireUnary:
    def test_past_upper_bound_expires(self):
        (a,) = ctrl("a")
        assert expire_unary([disj(unary(a, 0, 5))], tv(7)).violated

    def test_boundary_still_schedulable(self):
        (a,) = ctrl("a")
        status = expire_unary([disj(unary(a, 0, 5))], tv(5))
        assert not status.violated and len(status.updated) == 1

    def test_uncontrollables_untouched(self):
        (u,) = unc("u")
        status = expire_unary([disj(unary(u, 0, 5))], tv(7))
        assert not status.violated and len(status.updated) == 1


def _random_case(rng):
    points = ctrl("a", "b", "c") + unc("u",)
    constraints = []
    for _ in range(rng.randint(1, 4)):
        conjuncts = []
        for _ in range(rng.randint(1, 3)):
            v = rng.choice(points)
            lo = rng.randint(-10, 10)
            hi = lo + rng.randint(0, 10)
            if rng.random() < 0.5:
                conjuncts.append(unary(v, lo, hi))
            else:
                vi = rng.choice([p for p in points if p != v])
                conjuncts.append(binary(v, vi, lo, hi))
        constraints.append(disj(*conjuncts))
    assignment = {p: tv(rng.randint(0, 12)) for p in points}
    return points, constraints, assignment


def test_exact_folding_matches_direct_evaluation():
    """Folding exact propagation over a full assignment agrees with directly
    evaluating every disjunct under that assignment."""
    rng = random.Random(42)
    for _ in range(300):
        points, constraints, assignment = _random_case(rng)
        current = tuple(constraints)
        violated = False
        for p in points:
            status = propagate_exact(current, p, assignment[p])
            if status.violated:
                violated = True
                break
            current = status.updated
        direct_bad = any(not evaluate_disjunct(d, assignment) for d in constraints)
        assert violated == direct_bad
        if not violated:
            assert current == ()  # everything resolved


def test_tight_bound_is_conservative_under_grid_sampling():
    """Whenever the bounded rewrite keeps a disjunct alive, every grid point
    of the occurrence window keeps it satisfiable under exact propagation."""
    rng = random.Random(7)
    (u,) = unc("u")
    (v,) = ctrl("v")
    for _ in range(200):
        lo = rng.randint(-5, 5)
        hi = lo + rng.randint(0, 6)
        w_lo = rng.randint(0, 5)
        w_hi = w_lo + rng.randint(0, 5)
        d = disj(binary(v, u, lo, hi))
        bounded = propagate_bounded([d], u, iv(w_lo, w_hi))
        if bounded.violated:
            continue
        tight = bounded.updated[0].conjuncts[0].iv if bounded.updated else None
        t = Fraction(w_lo)
        while t <= w_hi:
            exact = propagate_exact([d], u, tv(t))
            assert not exact.violated
            if tight is not None and exact.updated:
                exact_iv = exact.updated[0].conjuncts[0].iv
                assert exact_iv.lo <= tight.lo and tight.hi <= exact_iv.hi
            t += Fraction(1, 3)
