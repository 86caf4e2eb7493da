"""Built-in example networks.

``perroquet`` models two vehicles advancing in alternation: each agent
maneuver a_i triggers the partner maneuver u_i within [delta, d_max],
the next agent maneuver must follow u_i within [delta, h_max], and every
agent maneuver must finish before an exposure window [big1, big2] opens
or start after it closes (the first one strictly before, so the pair
cannot simply sit out the exposure).
"""

from __future__ import annotations

from .core import (
    INF,
    Conjunct,
    ContingencyLink,
    Disjunct,
    Dtnu,
    Interval,
    controllable,
    tv,
    uncontrollable,
)


def perroquet(
    maneuvers: int = 3,
    delta=10,
    big1=25,
    big2=65,
    d_max=40,
    h_max=40,
) -> Dtnu:
    delta, big1, big2, d_max, h_max = map(tv, (delta, big1, big2, d_max, h_max))
    zero = tv(0)
    ctrl = tuple(controllable(f"a{i+1}", i) for i in range(maneuvers))
    unc = tuple(uncontrollable(f"u{i+1}", i) for i in range(maneuvers))
    before = Interval(zero, big1 - delta)
    after = Interval(big2, INF)
    constraints = [Disjunct((Conjunct(ctrl[0], before),))]
    for a in ctrl[1:]:
        constraints.append(Disjunct((Conjunct(a, before), Conjunct(a, after))))
    for i in range(maneuvers - 1):
        constraints.append(
            Disjunct((Conjunct(ctrl[i + 1], Interval(delta, h_max), unc[i]),))
        )
    links = tuple(
        ContingencyLink(ctrl[i], (Interval(delta, d_max),), unc[i])
        for i in range(maneuvers)
    )
    return Dtnu(ctrl, unc, tuple(constraints), links)


def single_controllable() -> Dtnu:
    """One free timepoint inside one window; solvable by scheduling at 0."""
    a = controllable("a", 0)
    return Dtnu((a,), (), (Disjunct((Conjunct(a, Interval(tv(0), tv(10))),)),), ())


def fixed_offset_after_occurrence() -> Dtnu:
    """a2 must land exactly 1 unit after u1: impossible when occurrence
    times are only ever known up to a window."""
    a1, a2 = controllable("a1", 0), controllable("a2", 1)
    u1 = uncontrollable("u1", 0)
    return Dtnu(
        (a1, a2),
        (u1,),
        (Disjunct((Conjunct(a2, Interval(tv(1), tv(1)), u1),)),),
        (ContingencyLink(a1, (Interval(tv(1), tv(2)),), u1),),
    )


def reaction_required() -> Dtnu:
    """u1 - a2 in [0, 0]: only an instant reaction to u1 can satisfy it."""
    a1, a2 = controllable("a1", 0), controllable("a2", 1)
    u1 = uncontrollable("u1", 0)
    return Dtnu(
        (a1, a2),
        (u1,),
        (Disjunct((Conjunct(u1, Interval(tv(0), tv(0)), a2),)),),
        (ContingencyLink(a1, (Interval(tv(1), tv(2)),), u1),),
    )


BUILTIN = {
    "t0": single_controllable,
    "t2": fixed_offset_after_occurrence,
    "t3": reaction_required,
    "perroquet": perroquet,
}
