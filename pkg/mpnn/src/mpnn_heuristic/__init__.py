"""Learned ranking heuristic for the rtdc tree search."""

from .model import HeuristicNet, ModelConfig, MsgPassLayer, masked_bce
from .train import train

__all__ = ["HeuristicNet", "ModelConfig", "MsgPassLayer", "masked_bce", "train"]
