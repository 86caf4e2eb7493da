"""Edge-conditioned message passing network scoring active graph nodes.

Each layer aggregates, for every node, the sum over in-edges of an
edge-conditioned linear map applied to the source node's features: a
small MLP turns the edge's feature vector into a full weight matrix.
Five layers (batch-normalized, ReLU between, residual where shapes
match), dropout before a per-node linear head, sigmoid out.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import torch
from torch import nn

GRAPH_LAYOUT = "dtnu-graph-v1"  # must match the encoder of the dataset producer


@dataclass
class ModelConfig:
    layers: int = 5
    node_features: int = 32
    mlp_hidden: int = 128
    in_features: int = 4
    edge_features: int = 16
    residual: bool = True
    batch_norm: bool = True
    dropout_keep: float = 0.9
    optimizer: str = "adagrad"
    learning_rate: float = 1e-4
    layout: str = GRAPH_LAYOUT


class MsgPassLayer(nn.Module):
    """h'_i = sum over edges (j -> i) of MLP(edge_feat) @ h_j."""

    def __init__(self, in_dim: int, out_dim: int, edge_dim: int, hidden: int):
        super().__init__()
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.mlp = nn.Sequential(
            nn.Linear(edge_dim, hidden),
            nn.ReLU(),
            nn.Linear(hidden, in_dim * out_dim),
        )

    def forward(self, h: torch.Tensor, edge_index: torch.Tensor, edge_attr: torch.Tensor) -> torch.Tensor:
        if h.shape[1] != self.in_dim:
            raise ValueError(f"expected {self.in_dim} node features, got {h.shape[1]}")
        out = h.new_zeros((h.shape[0], self.out_dim))
        if edge_index.numel() == 0:
            return out
        weights = self.mlp(edge_attr).view(-1, self.out_dim, self.in_dim)
        messages = torch.bmm(weights, h[edge_index[0]].unsqueeze(-1)).squeeze(-1)
        out.index_add_(0, edge_index[1], messages)
        return out


class HeuristicNet(nn.Module):
    def __init__(self, config: ModelConfig | None = None):
        super().__init__()
        self.config = config or ModelConfig()
        c = self.config
        dims = [c.in_features] + [c.node_features] * c.layers
        self.layers = nn.ModuleList(
            MsgPassLayer(dims[i], dims[i + 1], c.edge_features, c.mlp_hidden)
            for i in range(c.layers)
        )
        self.norms = nn.ModuleList(
            nn.BatchNorm1d(dims[i + 1]) if c.batch_norm else nn.Identity()
            for i in range(c.layers)
        )
        self.dropout = nn.Dropout(p=1.0 - c.dropout_keep)
        self.head = nn.Linear(c.node_features, 1)

    def node_logits(self, h, edge_index, edge_attr):
        for i, (layer, norm) in enumerate(zip(self.layers, self.norms)):
            out = layer(h, edge_index, edge_attr)
            if self.config.residual and out.shape == h.shape:
                out = out + h
            out = norm(out)
            if i < len(self.layers) - 1:
                out = torch.relu(out)
            h = out
        return self.head(self.dropout(h)).squeeze(-1)

    def forward(self, h, edge_index, edge_attr):
        """Per-node probabilities in [0, 1]."""
        return torch.sigmoid(self.node_logits(h, edge_index, edge_attr))


def masked_bce(probs: torch.Tensor, labels: torch.Tensor, active: torch.Tensor) -> torch.Tensor:
    """Binary cross-entropy summed over active nodes only; labels of
    non-active nodes never touch the loss."""
    eps = 1e-7
    p = probs[active].clamp(eps, 1 - eps)
    y = labels[active]
    return (-y * torch.log(p) - (1 - y) * torch.log(1 - p)).sum()


def save_checkpoint(path: str, model: HeuristicNet, extra: dict | None = None):
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    torch.save(model.state_dict(), out / "weights.pt")
    meta = {"config": asdict(model.config)}
    if extra:
        meta.update(extra)
    (out / "config.json").write_text(json.dumps(meta, indent=2, sort_keys=True))


def load_checkpoint(path: str) -> HeuristicNet:
    meta = json.loads((Path(path) / "config.json").read_text())
    config = ModelConfig(**meta["config"])
    model = HeuristicNet(config)
    model.load_state_dict(torch.load(Path(path) / "weights.pt", map_location="cpu"))
    model.eval()
    return model
