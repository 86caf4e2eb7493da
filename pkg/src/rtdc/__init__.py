"""Reactive scheduling of disjunctive temporal networks with uncertainty."""

from .core import (
    Conjunct,
    ContingencyLink,
    Disjunct,
    Dtnu,
    Interval,
    Kind,
    TimeValue,
    Timepoint,
    iv,
    tv,
    validate,
)
from .search import SolveConfig, Verdict, solve
from .strategy import VerifyConfig, extract, render_text, verify

__all__ = [
    "Conjunct",
    "ContingencyLink",
    "Disjunct",
    "Dtnu",
    "Interval",
    "Kind",
    "TimeValue",
    "Timepoint",
    "iv",
    "tv",
    "validate",
    "SolveConfig",
    "Verdict",
    "solve",
    "VerifyConfig",
    "extract",
    "render_text",
    "verify",
]
