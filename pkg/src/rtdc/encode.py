"""Deterministic conversion of a network (or mid-search node) into a
feature graph for heuristic ranking.

Layout ``dtnu-graph-v1``:

* node features, 4 one-hot slots: controllable, uncontrollable,
  disjunction-intermediary, wait;
* edge features, 16 one-hot slots: 10 distance classes over normalized
  bound magnitudes, 3 edge types (constraint, disjunction-membership,
  contingency), 2 bound roles (lower, upper), 1 negative-direction sign.

Times are rebased so the node's current moment is 0, normalized by the
largest finite magnitude d_max, and binned into the distance classes.
Binary conjuncts put a pair of directed edges between their endpoints
(upper bound forward, lower bound backward); unary conjuncts and live
activation windows anchor on the wait node, which doubles as the time
origin.  A disjunct with several conjuncts (or a link with several
windows) adds one intermediary node with membership edges.  The ``active``
list is the remaining controllables in input order followed by the wait
node; multiple features landing on one ordered pair are OR-merged.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

from .core import Dtnu, Interval, Kind, TimeValue, Timepoint

LAYOUT_VERSION = "dtnu-graph-v1"

NODE_FEATURES = 4
_N_CONTROLLABLE, _N_UNCONTROLLABLE, _N_DISJUNCTION, _N_WAIT = range(4)

EDGE_FEATURES = 16
_E_TYPE_CONSTRAINT = 10
_E_TYPE_MEMBER = 11
_E_TYPE_CONTINGENCY = 12
_E_ROLE_LOWER = 13
_E_ROLE_UPPER = 14
_E_NEGATIVE = 15


class OutOfRange(ValueError):
    pass


def distance_class(x: Fraction) -> int:
    """Bin a normalized value into 10 classes; the top bin is closed."""
    if x < 0 or x > 1:
        raise OutOfRange(f"normalized value {x} outside [0, 1]")
    return min(int(x * 10), 9)


@dataclass(frozen=True)
class EncodedGraph:
    layout: str
    node_ids: tuple[str, ...]
    node_features: tuple[tuple[int, ...], ...]
    edges: tuple[tuple[int, int, tuple[int, ...]], ...]  # (src, dst, features)
    active: tuple[int, ...]  # controllable node indices then the wait node
    degenerate: bool = False

    def to_payload(self) -> dict:
        return {
            "layout": self.layout,
            "node_ids": list(self.node_ids),
            "node_features": [list(f) for f in self.node_features],
            "edges": [[s, d, list(f)] for s, d, f in self.edges],
            "active": list(self.active),
            "degenerate": self.degenerate,
        }

    @staticmethod
    def from_payload(data: dict) -> "EncodedGraph":
        return EncodedGraph(
            layout=data["layout"],
            node_ids=tuple(data["node_ids"]),
            node_features=tuple(tuple(f) for f in data["node_features"]),
            edges=tuple((s, d, tuple(f)) for s, d, f in data["edges"]),
            active=tuple(data["active"]),
            degenerate=bool(data.get("degenerate", False)),
        )


class _Builder:
    def __init__(self):
        self.ids: list[str] = []
        self.features: list[tuple[int, ...]] = []
        self.index: dict[str, int] = {}
        self.edges: dict[tuple[int, int], list[int]] = {}

    def node(self, node_id: str, kind_slot: int) -> int:
        if node_id in self.index:
            return self.index[node_id]
        feat = [0] * NODE_FEATURES
        feat[kind_slot] = 1
        i = len(self.ids)
        self.ids.append(node_id)
        self.features.append(tuple(feat))
        self.index[node_id] = i
        return i

    def edge(self, src: int, dst: int, slots: Sequence[int]):
        feat = self.edges.setdefault((src, dst), [0] * EDGE_FEATURES)
        for s in slots:
            feat[s] = 1


def _bound_slots(value: TimeValue, now: TimeValue, relative: bool, d_max: Fraction, role: int, etype: int) -> list[int]:
    v = value if relative else value - now
    slots = [etype, role]
    if not v.finite:
        slots.append(9)
        if v.inf < 0:
            slots.append(_E_NEGATIVE)
        return slots
    f = v.as_fraction()
    if f < 0:
        slots.append(_E_NEGATIVE)
        f = -f
    slots.append(distance_class(f / d_max if d_max else Fraction(0)))
    return slots


def _collect_magnitudes(values, now) -> list[Fraction]:
    out = []
    for value, relative in values:
        v = value if relative else value - now
        if v.finite:
            out.append(abs(v.as_fraction()))
    return out


def to_graph(subject: Union[Dtnu, object], dtnu: Optional[Dtnu] = None) -> EncodedGraph:
    """Encode a whole network, or a mid-search node (pass the network too)."""
    if isinstance(subject, Dtnu):
        network = subject
        now = TimeValue(0)
        constraints = subject.constraints
        scheduled: dict = {}
        occurred: dict = {}
        activated: dict = {}
    else:
        if dtnu is None:
            raise ValueError("encoding a search node needs the owning network")
        network = dtnu
        now = subject.now
        constraints = subject.constraints
        scheduled = subject.scheduled
        occurred = subject.occurred
        activated = subject.activated

    remaining_c = [a for a in network.controllables if a not in scheduled]
    remaining_u = [u for u in network.uncontrollables if u not in occurred]
    live_links = [
        l for l in network.links
        if l.trigger not in scheduled and l.target not in occurred
    ]

    # d_max over rebased finite magnitudes in constraints, links, windows
    mags: list[Fraction] = []
    for d in constraints:
        for c in d.conjuncts:
            rel = not c.unary
            mags += _collect_magnitudes([(c.iv.lo, rel), (c.iv.hi, rel)], now)
    for l in live_links:
        for w in l.intervals:
            mags += _collect_magnitudes([(w.lo, True), (w.hi, True)], now)
    for windows in activated.values():
        for w in windows:
            mags += _collect_magnitudes([(w.lo, False), (w.hi, False)], now)
    d_max = max(mags, default=Fraction(0))
    degenerate = d_max == 0
    if degenerate:
        d_max = Fraction(1)

    b = _Builder()
    for a in remaining_c:
        b.node(a.id, _N_CONTROLLABLE)
    for u in remaining_u:
        b.node(u.id, _N_UNCONTROLLABLE)
    wait = b.node("__wait__", _N_WAIT)

    def endpoint(c) -> tuple[int, int]:
        # (src, dst) of the forward (upper-bound) edge
        if c.unary:
            return wait, b.index[c.v.id]
        return b.index[c.vi.id], b.index[c.v.id]

    for di, d in enumerate(constraints):
        member = None
        if len(d.conjuncts) > 1:
            member = b.node(f"disj:{di}", _N_DISJUNCTION)
        for c in d.conjuncts:
            rel = not c.unary
            src, dst = endpoint(c)
            b.edge(src, dst, _bound_slots(c.iv.hi, now, rel, d_max, _E_ROLE_UPPER, _E_TYPE_CONSTRAINT))
            b.edge(dst, src, _bound_slots(c.iv.lo, now, rel, d_max, _E_ROLE_LOWER, _E_TYPE_CONSTRAINT))
            if member is not None:
                for n in {src, dst}:
                    b.edge(n, member, [_E_TYPE_MEMBER])
                    b.edge(member, n, [_E_TYPE_MEMBER])

    for li, l in enumerate(live_links):
        src = b.index[l.trigger.id]
        dst = b.index[l.target.id]
        member = None
        if len(l.intervals) > 1:
            member = b.node(f"link:{li}", _N_DISJUNCTION)
        for w in l.intervals:
            b.edge(src, dst, _bound_slots(w.hi, now, True, d_max, _E_ROLE_UPPER, _E_TYPE_CONTINGENCY))
            b.edge(dst, src, _bound_slots(w.lo, now, True, d_max, _E_ROLE_LOWER, _E_TYPE_CONTINGENCY))
        if member is not None:
            for n in (src, dst):
                b.edge(n, member, [_E_TYPE_MEMBER])
                b.edge(member, n, [_E_TYPE_MEMBER])

    for u, windows in activated.items():
        if u in occurred:
            continue
        un = b.index[u.id]
        for w in windows:
            b.edge(wait, un, _bound_slots(w.hi, now, False, d_max, _E_ROLE_UPPER, _E_TYPE_CONTINGENCY))
            b.edge(un, wait, _bound_slots(w.lo, now, False, d_max, _E_ROLE_LOWER, _E_TYPE_CONTINGENCY))

    active = tuple(b.index[a.id] for a in remaining_c) + (wait,)
    edges = tuple(
        (s, d, tuple(f)) for (s, d), f in sorted(b.edges.items())
    )
    return EncodedGraph(
        layout=LAYOUT_VERSION,
        node_ids=tuple(b.ids),
        node_features=tuple(b.features),
        edges=edges,
        active=active,
        degenerate=degenerate,
    )
