"""Training loop: masked binary cross-entropy over active nodes.

The split follows the 25K/5K ratio of the reference configuration (5/6
train, 1/6 validation) unless sizes are given explicitly.  The report
records per-epoch loss and final cross-validation accuracy next to the
majority-class baseline.
"""

from __future__ import annotations

import argparse
import json
import random
import time
from dataclasses import asdict
from pathlib import Path

import torch

from .data import Batch, GraphRecord, collate, load_dataset
from .model import HeuristicNet, ModelConfig, masked_bce, save_checkpoint


def make_optimizer(model: HeuristicNet, config: ModelConfig):
    if config.optimizer == "adagrad":
        return torch.optim.Adagrad(model.parameters(), lr=config.learning_rate)
    if config.optimizer == "adam":
        return torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    raise ValueError(f"unknown optimizer {config.optimizer!r}")


def accuracy(model: HeuristicNet, records: list[GraphRecord]) -> float:
    if not records:
        return 0.0
    model.eval()
    hits = total = 0
    with torch.no_grad():
        for chunk in _chunks(records, 256):
            b = collate(chunk)
            probs = model(b.node_features, b.edge_index, b.edge_attr)
            pred = (probs[b.active] >= 0.5).float()
            hits += (pred == b.labels[b.active]).sum().item()
            total += len(b.active)
    return hits / max(1, total)


def majority_baseline(records: list[GraphRecord]) -> float:
    ones = total = 0
    for r in records:
        ones += int(r.labels.sum().item())
        total += len(r.labels)
    p = ones / max(1, total)
    return max(p, 1 - p)


def _chunks(xs, size):
    for i in range(0, len(xs), size):
        yield xs[i : i + size]


def train(
    dataset_path: str,
    config: ModelConfig | None = None,
    epochs: int = 30,
    batch_size: int = 32,
    seed: int = 0,
    val_fraction: float = 1 / 6,
    out_dir: str | None = None,
    log=print,
) -> tuple[HeuristicNet, dict]:
    config = config or ModelConfig()
    torch.manual_seed(seed)
    records = load_dataset(dataset_path, config.layout)
    rng = random.Random(seed)
    order = list(range(len(records)))
    rng.shuffle(order)
    n_val = max(1, int(len(records) * val_fraction))
    val = [records[i] for i in order[:n_val]]
    tr = [records[i] for i in order[n_val:]]

    model = HeuristicNet(config)
    opt = make_optimizer(model, config)
    history = []
    started = time.monotonic()
    for epoch in range(epochs):
        model.train()
        rng.shuffle(tr)
        total_loss = 0.0
        total_active = 0
        for chunk in _chunks(tr, batch_size):
            b = collate(chunk)
            opt.zero_grad()
            probs = model(b.node_features, b.edge_index, b.edge_attr)
            loss = masked_bce(probs, b.labels, b.active)
            loss.backward()
            opt.step()
            total_loss += loss.item()
            total_active += len(b.active)
        epoch_loss = total_loss / max(1, total_active)
        history.append(epoch_loss)
        if (epoch + 1) % 5 == 0 or epoch == epochs - 1:
            log(f"epoch {epoch + 1}/{epochs}: loss/active {epoch_loss:.4f}")

    report = {
        "train_size": len(tr),
        "val_size": len(val),
        "epoch_loss": history,
        "train_accuracy": accuracy(model, tr),
        "val_accuracy": accuracy(model, val),
        "val_majority_baseline": majority_baseline(val),
        "wall_time_s": time.monotonic() - started,
        "epochs": epochs,
        "batch_size": batch_size,
        "seed": seed,
    }
    if out_dir:
        save_checkpoint(out_dir, model, extra={"report": report})
    return model, report


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="train the ranking heuristic")
    parser.add_argument("dataset")
    parser.add_argument("--out", required=True, help="checkpoint directory")
    parser.add_argument("--epochs", type=int, default=30)
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--optimizer", default="adagrad", choices=("adagrad", "adam"))
    parser.add_argument("--lr", type=float, default=1e-4)
    args = parser.parse_args(argv)
    config = ModelConfig(optimizer=args.optimizer, learning_rate=args.lr)
    _, report = train(
        args.dataset, config, epochs=args.epochs, batch_size=args.batch_size,
        seed=args.seed, out_dir=args.out,
    )
    print(json.dumps({k: v for k, v in report.items() if k != "epoch_loss"}, indent=2))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
