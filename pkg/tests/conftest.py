import pytest

from rtdc.core import (
    Conjunct,
    ContingencyLink,
    Disjunct,
    Dtnu,
    Interval,
    controllable,
    iv,
    tv,
    uncontrollable,
)


def ctrl(*names):
    return tuple(controllable(n, i) for i, n in enumerate(names))


def unc(*names):
    return tuple(uncontrollable(n, i) for i, n in enumerate(names))


def unary(v, lo, hi):
    return Conjunct(v, iv(lo, hi))


def binary(v, vi, lo, hi):
    return Conjunct(v, iv(lo, hi), vi)


def disj(*conjuncts):
    return Disjunct(tuple(conjuncts))


@pytest.fixture
def ab():
    return ctrl("a", "b")
