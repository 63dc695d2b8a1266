"""Reference model pieces: uniform neighbor draws and plain mean aggregation.

This is the comparison target for ablations. The trainer reaches the same
behavior through its toggle flags; the standalone layer here is a separate
plain-numpy implementation kept for clean numerical comparison.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, ShapeError
from .model import Neighborhoods, pack_neighborhoods
from .sampler import SampledNeighborhood
from .tgraph import TransactionGraph

_ACTIVATIONS = {
    "relu": lambda x: np.maximum(x, 0.0),
    "tanh": np.tanh,
    "sigmoid": lambda x: 1.0 / (1.0 + np.exp(-x)),
    "identity": lambda x: x,
}


def uniform_sample(graph: TransactionGraph, node: int, z: int,
                   rng: np.random.Generator) -> list[int]:
    """Up to z distinct graph neighbors drawn uniformly, id-sorted."""
    nbrs = graph.neighbors(node)
    if len(nbrs) <= z:
        return list(nbrs)
    picked = rng.choice(len(nbrs), size=z, replace=False)
    return sorted(nbrs[i] for i in picked)


def uniform_neighborhoods(graph: TransactionGraph, z: int,
                          rng: np.random.Generator) -> Neighborhoods:
    """Uniform-random neighborhoods for every node, packed for the model."""
    sampled = []
    for rec in graph.records:
        chosen = uniform_sample(graph, rec.id, z, rng)
        probs = [1.0 / len(chosen)] * len(chosen) if chosen else []
        sampled.append(SampledNeighborhood(node=rec.id, selected=chosen,
                                           probabilities=probs))
    return pack_neighborhoods(graph, sampled)


def baseline_layer_forward(h_prev: np.ndarray, nb: Neighborhoods,
                           W: np.ndarray, activation: str = "relu") -> np.ndarray:
    """Mean-aggregation layer: h = norm(act(concat(h, mean of neighbors) @ W)).

    Nodes without neighbors aggregate the zero vector. Output rows are
    L2-normalized, with all-zero rows left alone.
    """
    h_prev = np.asarray(h_prev, dtype=np.float64)
    W = np.asarray(W, dtype=np.float64)
    if W.shape[0] != 2 * h_prev.shape[1]:
        raise ShapeError(
            f"combine matrix expects {2 * h_prev.shape[1]} rows, got {W.shape[0]}")
    if activation not in _ACTIVATIONS:
        raise ConfigError(f"unknown activation {activation!r}")
    counts = nb.mask.sum(axis=1, keepdims=True).astype(np.float64)
    gathered = h_prev[nb.idx] * nb.mask[:, :, None]
    mean = gathered.sum(axis=1) / np.where(counts > 0, counts, 1.0)
    combined = np.concatenate([h_prev, mean], axis=1) @ W
    out = _ACTIVATIONS[activation](combined)
    norms = np.linalg.norm(out, axis=1, keepdims=True)
    return out / np.where(norms > 0, norms, 1.0)
