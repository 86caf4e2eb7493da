"""Line-delimited JSON inference server for the tree search.

Handshake first: one line advertising the protocol and the graph layout
the checkpoint was trained on.  Then one ``{"graph": ..., "active":
[...]}`` request per line, answered with ``{"probs": [...]}``; malformed
requests get an ``{"error": ...}`` line and the loop continues.  The
model runs in eval mode so identical requests get identical replies.
"""

from __future__ import annotations

import argparse
import json
import sys

import torch

from .data import record_from_payload
from .model import HeuristicNet, load_checkpoint

PROTOCOL_VERSION = "rtdc-heuristic-v1"


def rank(model: HeuristicNet, graph_payload: dict) -> list[float]:
    rec = record_from_payload(graph_payload)
    with torch.no_grad():
        probs = model(rec.node_features, rec.edge_index, rec.edge_attr)
    return [float(probs[i].item()) for i in rec.active.tolist()]


def serve(model: HeuristicNet, stdin=None, stdout=None) -> int:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    model.eval()
    print(
        json.dumps({"protocol": PROTOCOL_VERSION, "layout": model.config.layout}),
        file=stdout,
        flush=True,
    )
    for line in stdin:
        if not line.strip():
            continue
        try:
            request = json.loads(line)
            graph = request["graph"]
            if graph.get("layout") != model.config.layout:
                raise ValueError(
                    f"request layout {graph.get('layout')!r} != {model.config.layout!r}"
                )
            probs = rank(model, graph)
            reply = {"probs": probs}
        except Exception as exc:
            reply = {"error": repr(exc)}
        print(json.dumps(reply), file=stdout, flush=True)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="serve ranking probabilities")
    parser.add_argument("checkpoint", help="checkpoint directory from training")
    args = parser.parse_args(argv)
    return serve(load_checkpoint(args.checkpoint))


if __name__ == "__main__":
    raise SystemExit(main())
