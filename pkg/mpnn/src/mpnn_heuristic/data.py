"""Dataset loading for line-delimited labeled-graph files.

The first line is a header naming the graph layout version; records
carry a graph payload (node features, edge list with features, active
node indices) and one 0/1 label per active node.  Graphs are batched by
concatenation into one disjoint graph with offset edge indices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import torch


class LayoutMismatch(RuntimeError):
    pass


@dataclass
class GraphRecord:
    node_features: torch.Tensor  # [n, in_features] float32
    edge_index: torch.Tensor     # [2, e] long (src, dst)
    edge_attr: torch.Tensor      # [e, edge_features] float32
    active: torch.Tensor         # [k] long
    labels: torch.Tensor         # [k] float32


def record_from_payload(graph: dict, labels=None) -> GraphRecord:
    nodes = torch.tensor(graph["node_features"], dtype=torch.float32)
    edges = graph["edges"]
    if edges:
        edge_index = torch.tensor([[e[0] for e in edges], [e[1] for e in edges]], dtype=torch.long)
        edge_attr = torch.tensor([e[2] for e in edges], dtype=torch.float32)
    else:
        edge_index = torch.zeros((2, 0), dtype=torch.long)
        edge_attr = torch.zeros((0, 16), dtype=torch.float32)
    active = torch.tensor(graph["active"], dtype=torch.long)
    y = torch.tensor(labels if labels is not None else [0] * len(graph["active"]), dtype=torch.float32)
    return GraphRecord(nodes, edge_index, edge_attr, active, y)


def load_dataset(path: str, expected_layout: str) -> list[GraphRecord]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise LayoutMismatch(f"{path}: empty dataset")
    header = json.loads(lines[0])
    layout = header.get("layout")
    if layout != expected_layout:
        raise LayoutMismatch(
            f"{path}: dataset layout {layout!r} does not match model layout {expected_layout!r}"
        )
    records = []
    for line in lines[1:]:
        rec = json.loads(line)
        records.append(record_from_payload(rec["graph"], rec["labels"]))
    return records


@dataclass
class Batch:
    node_features: torch.Tensor
    edge_index: torch.Tensor
    edge_attr: torch.Tensor
    active: torch.Tensor
    labels: torch.Tensor


def collate(records: list[GraphRecord]) -> Batch:
    nodes, eidx, eattr, active, labels = [], [], [], [], []
    offset = 0
    for r in records:
        nodes.append(r.node_features)
        eidx.append(r.edge_index + offset)
        eattr.append(r.edge_attr)
        active.append(r.active + offset)
        labels_full = torch.zeros(r.node_features.shape[0])
        labels_full[r.active] = r.labels
        labels.append(labels_full)
        offset += r.node_features.shape[0]
    return Batch(
        torch.cat(nodes),
        torch.cat(eidx, dim=1),
        torch.cat(eattr),
        torch.cat(active),
        torch.cat(labels),
    )
