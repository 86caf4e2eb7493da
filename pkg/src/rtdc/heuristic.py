"""Heuristic providers ranking the children of a decision node.

A provider maps an encoded graph to one probability per active node
(remaining controllables, then the wait action).  The solver visits
higher-probability children first; any provider failure falls back to
creation order, so correctness never depends on the heuristic.

The subprocess provider speaks a line-delimited JSON protocol: the
server first sends a handshake line advertising its protocol and graph
layout versions, then answers each ``{"graph": ..., "active": [...]}``
request with one ``{"probs": [...]}`` line.
"""

from __future__ import annotations

import json
import random
import shlex
import subprocess
from typing import Optional, Protocol, Sequence

from .encode import LAYOUT_VERSION, EncodedGraph

PROTOCOL_VERSION = "rtdc-heuristic-v1"


class HeuristicError(Exception):
    pass


class HeuristicProvider(Protocol):
    def rank(self, graph: EncodedGraph) -> Optional[Sequence[float]]: ...

    def close(self) -> None: ...


class CreationOrder:
    """Keep children in creation order (no reordering)."""

    def rank(self, graph: EncodedGraph) -> Optional[Sequence[float]]:
        return None

    def close(self):
        pass


class RandomOrder:
    """Uniformly random child ordering, reproducible from the seed."""

    def __init__(self, seed: int = 0):
        self._rng = random.Random(seed)

    def rank(self, graph: EncodedGraph) -> Sequence[float]:
        return [self._rng.random() for _ in graph.active]

    def close(self):
        pass


class SubprocessHeuristic:
    """Ranking served by an external process over stdin/stdout."""

    def __init__(self, command: str):
        self.command = command
        self._proc = subprocess.Popen(
            shlex.split(command),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        hello = self._proc.stdout.readline()
        if not hello:
            raise HeuristicError(f"no handshake from {command!r}")
        try:
            head = json.loads(hello)
        except json.JSONDecodeError as exc:
            raise HeuristicError(f"bad handshake line: {exc}") from exc
        if head.get("protocol") != PROTOCOL_VERSION:
            raise HeuristicError(f"protocol mismatch: {head.get('protocol')!r}")
        if head.get("layout") != LAYOUT_VERSION:
            raise HeuristicError(
                f"graph layout mismatch: server speaks {head.get('layout')!r}, "
                f"this encoder emits {LAYOUT_VERSION!r}"
            )

    def rank(self, graph: EncodedGraph) -> Sequence[float]:
        if self._proc.poll() is not None:
            raise HeuristicError("heuristic subprocess exited")
        request = json.dumps({"graph": graph.to_payload(), "active": list(graph.active)})
        try:
            self._proc.stdin.write(request + "\n")
            self._proc.stdin.flush()
            line = self._proc.stdout.readline()
        except (BrokenPipeError, OSError) as exc:
            raise HeuristicError(f"subprocess i/o failed: {exc}") from exc
        if not line:
            raise HeuristicError("subprocess closed its output")
        reply = json.loads(line)
        if "error" in reply:
            raise HeuristicError(f"server error: {reply['error']}")
        probs = reply.get("probs")
        if not isinstance(probs, list) or len(probs) != len(graph.active):
            raise HeuristicError("reply length does not match active nodes")
        if any(not (0.0 <= p <= 1.0) for p in probs):
            raise HeuristicError("probabilities outside [0, 1]")
        return probs

    def close(self):
        if self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            self._proc.terminate()
            try:
                self._proc.wait(timeout=2)
            except subprocess.TimeoutExpired:
                self._proc.kill()
