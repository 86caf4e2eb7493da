"""File formats: the network JSON schema and strategy documents.

Network documents carry every number as a decimal (or ``p/q``) string so
values survive the round trip exactly; ``"inf"``/``"-inf"`` mark open
bounds.  Schema:

    {"controllables": ["a1", ...],
     "uncontrollables": ["u1", ...],
     "constraints": [[{"kind": "unary"|"binary", "v": id, "vi": id?,
                       "lo": "0", "hi": "10.5"}, ...], ...],
     "links": [{"trigger": id, "intervals": [["1", "2"], ...], "target": id}]}
"""

from __future__ import annotations

import json
from typing import Any, Union

from .core import (
    Conjunct,
    ContingencyLink,
    Disjunct,
    Dtnu,
    Interval,
    TimeValue,
    Timepoint,
    controllable,
    tv,
    uncontrollable,
)


class FormatError(ValueError):
    """Structurally invalid document; the message names the offending spot."""


def _time_in(value: Any, where: str) -> TimeValue:
    if isinstance(value, bool) or not isinstance(value, (str, int, float)):
        raise FormatError(f"{where}: expected a number string, got {value!r}")
    try:
        return tv(str(value))
    except (ValueError, ZeroDivisionError) as exc:
        raise FormatError(f"{where}: unreadable number {value!r}: {exc}") from exc


def _interval_in(pair: Any, where: str) -> Interval:
    if not isinstance(pair, (list, tuple)) or len(pair) != 2:
        raise FormatError(f"{where}: expected [lo, hi]")
    lo = _time_in(pair[0], f"{where}.lo")
    hi = _time_in(pair[1], f"{where}.hi")
    if lo > hi:
        raise FormatError(f"{where}: empty interval [{lo}, {hi}]")
    return Interval(lo, hi)


def dtnu_from_payload(data: Any) -> Dtnu:
    if not isinstance(data, dict):
        raise FormatError("top level: expected an object")
    for key in ("controllables", "uncontrollables", "constraints", "links"):
        if key not in data:
            raise FormatError(f"top level: missing {key!r}")
    by_id: dict[str, Timepoint] = {}
    ctrl = []
    for i, name in enumerate(data["controllables"]):
        if not isinstance(name, str):
            raise FormatError(f"controllables[{i}]: ids are strings")
        t = controllable(name, i)
        if name in by_id:
            raise FormatError(f"controllables[{i}]: duplicate id {name!r}")
        by_id[name] = t
        ctrl.append(t)
    unc = []
    for j, name in enumerate(data["uncontrollables"]):
        if not isinstance(name, str):
            raise FormatError(f"uncontrollables[{j}]: ids are strings")
        if name in by_id:
            raise FormatError(f"uncontrollables[{j}]: duplicate id {name!r}")
        t = uncontrollable(name, j)
        by_id[name] = t
        unc.append(t)

    def lookup(name: Any, where: str) -> Timepoint:
        if not isinstance(name, str) or name not in by_id:
            raise FormatError(f"{where}: unknown timepoint {name!r}")
        return by_id[name]

    constraints = []
    for di, disj in enumerate(data["constraints"]):
        if not isinstance(disj, list) or not disj:
            raise FormatError(f"constraints[{di}]: expected a non-empty conjunct list")
        conjuncts = []
        for ci, item in enumerate(disj):
            where = f"constraints[{di}][{ci}]"
            if not isinstance(item, dict):
                raise FormatError(f"{where}: expected an object")
            kind = item.get("kind")
            iv = _interval_in([item.get("lo"), item.get("hi")], where)
            if kind == "unary":
                conjuncts.append(Conjunct(lookup(item.get("v"), where), iv))
            elif kind == "binary":
                conjuncts.append(
                    Conjunct(lookup(item.get("v"), where), iv, lookup(item.get("vi"), where))
                )
            else:
                raise FormatError(f"{where}: kind must be 'unary' or 'binary'")
        constraints.append(Disjunct(tuple(conjuncts)))

    links = []
    for li, item in enumerate(data["links"]):
        where = f"links[{li}]"
        if not isinstance(item, dict):
            raise FormatError(f"{where}: expected an object")
        intervals = item.get("intervals")
        if not isinstance(intervals, list) or not intervals:
            raise FormatError(f"{where}: expected a non-empty interval list")
        links.append(
            ContingencyLink(
                lookup(item.get("trigger"), where),
                tuple(_interval_in(p, f"{where}.intervals[{k}]") for k, p in enumerate(intervals)),
                lookup(item.get("target"), where),
            )
        )
    return Dtnu(tuple(ctrl), tuple(unc), tuple(constraints), tuple(links))


def dtnu_to_payload(dtnu: Dtnu) -> dict:
    def t(v: TimeValue) -> str:
        return str(v)

    constraints = []
    for d in dtnu.constraints:
        row = []
        for c in d.conjuncts:
            item = {"kind": "unary" if c.unary else "binary", "v": c.v.id,
                    "lo": t(c.iv.lo), "hi": t(c.iv.hi)}
            if not c.unary:
                item["vi"] = c.vi.id
            row.append(item)
        constraints.append(row)
    return {
        "controllables": [a.id for a in dtnu.controllables],
        "uncontrollables": [u.id for u in dtnu.uncontrollables],
        "constraints": constraints,
        "links": [
            {
                "trigger": l.trigger.id,
                "intervals": [[t(w.lo), t(w.hi)] for w in l.intervals],
                "target": l.target.id,
            }
            for l in dtnu.links
        ],
    }


def load_dtnu(path: str) -> Dtnu:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return dtnu_from_payload(data)


def save_dtnu(path: str, dtnu: Dtnu):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(dtnu_to_payload(dtnu), fh, indent=2, sort_keys=True)
        fh.write("\n")


def dump_json(path: str, payload: Any):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
