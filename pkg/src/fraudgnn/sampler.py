"""Adaptive neighbor selection.

Each neighbor's selection probability is proportional to (strongest edge
weight between the pair) x (exponential cosine similarity of the feature
vectors). Top-z keeps the highest-probability neighbors; fraud nodes can
additionally pull in non-adjacent fraud nodes with similar behavior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InputError
from .tgraph import TransactionGraph, TransactionRecord, max_edge_weight

# exp(0.5): cosine >= 0.5 once pushed through the exponential similarity
DEFAULT_SIMILARITY_FLOOR = math.exp(0.5)

MODES = ("deterministic_topz", "weighted_without_replacement")

_SEED_MASK = (1 << 63) - 1


@dataclass
class SamplerConfig:
    z_hat: tuple[int, ...] = (20, 20, 20)
    oversample_count: int = 10
    similarity_floor: float = DEFAULT_SIMILARITY_FLOOR
    mode: str = "deterministic_topz"
    seed: int = 0

    def __post_init__(self):
        self.z_hat = tuple(int(z) for z in self.z_hat)
        if not self.z_hat or any(z < 1 for z in self.z_hat):
            raise ConfigError(f"z_hat must be positive per layer, got {self.z_hat}")
        if self.oversample_count < 0:
            raise ConfigError("oversample_count must be >= 0")
        if self.similarity_floor < 0:
            raise ConfigError("similarity_floor must be >= 0")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")


@dataclass
class SampledNeighborhood:
    """Selected neighbor ids for one node plus their selection probabilities.

    Over-sampled fraud extras are not part of the probability model and carry
    probability 0.0.
    """

    node: int
    selected: list[int] = field(default_factory=list)
    probabilities: list[float] = field(default_factory=list)


def _unit(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    return v / n if n > 0 else v


def similarity(a: TransactionRecord, b: TransactionRecord) -> float:
    """exp(dot of the L2-normalized feature vectors); zero vectors stay zero."""
    if a.attrs.shape != b.attrs.shape or a.attrs.size == 0:
        raise InputError(
            f"attr length mismatch: {a.attrs.shape[0] if a.attrs.size else 0} vs "
            f"{b.attrs.shape[0] if b.attrs.size else 0}"
        )
    return float(np.exp(np.dot(_unit(a.attrs), _unit(b.attrs))))


def unit_features(g: TransactionGraph) -> np.ndarray:
    """Row-normalized feature matrix (zero rows preserved); cached on the graph."""
    cached = getattr(g, "_unit_features", None)
    if cached is None:
        x = g.features()
        norms = np.linalg.norm(x, axis=1, keepdims=True)
        cached = np.divide(x, norms, out=np.zeros_like(x), where=norms > 0)
        g._unit_features = cached
    return cached


def selection_probabilities(g: TransactionGraph, v: int) -> dict[int, float]:
    """Per-neighbor selection probability: weight x similarity, normalized.

    Isolated nodes get an empty map; callers fall back to a self-only
    neighborhood.
    """
    nbrs = g.neighbors(v)
    if not nbrs:
        return {}
    u = unit_features(g)
    vi = g.index_of(v)
    scores = np.empty(len(nbrs))
    for j, nb in enumerate(nbrs):
        w = max_edge_weight(g, v, nb)
        scores[j] = w * math.exp(float(np.dot(u[vi], u[g.index_of(nb)])))
    total = scores.sum()
    return {nb: float(s / total) for nb, s in zip(nbrs, scores)}


def _node_rng(cfg: SamplerConfig, v: int) -> np.random.Generator:
    # per-node stream keyed by (seed, node id) so ordering/concurrency is irrelevant
    return np.random.default_rng((cfg.seed & _SEED_MASK, v & _SEED_MASK))


def combine_seed(seed: int, salt: int) -> int:
    """Fold a salt (e.g. an epoch number) into a sampler seed, stably."""
    return (seed * 1_000_003 + salt) & _SEED_MASK


def sample_topz(g: TransactionGraph, v: int, k: int, cfg: SamplerConfig) -> list[int]:
    """Select up to z_hat[k] neighbors of v by selection probability.

    Deterministic mode keeps the top probabilities (ties broken by ascending
    id); weighted mode draws without replacement proportionally to them.
    """
    probs = selection_probabilities(g, v)
    if not probs:
        return []
    z = cfg.z_hat[k]
    ids = np.array(sorted(probs))
    p = np.array([probs[i] for i in ids])
    if len(ids) <= z:
        return [int(i) for i in ids]
    if cfg.mode == "deterministic_topz":
        order = np.lexsort((ids, -p))[:z]
        return sorted(int(ids[i]) for i in order)
    rng = _node_rng(cfg, v)
    chosen = rng.choice(ids, size=z, replace=False, p=p / p.sum())
    return sorted(int(i) for i in chosen)


def oversample_fraud(
    g: TransactionGraph,
    v: int,
    base: list[int],
    cfg: SamplerConfig,
    fraud_pool: list[int] | None = None,
) -> list[int]:
    """Extend a fraud node's neighborhood with similar non-adjacent fraud nodes.

    Candidates must be labeled fraud, must not be v, must not already be graph
    neighbors or selected, and must clear the similarity floor. The
    ``oversample_count`` most similar qualify. ``fraud_pool`` restricts the
    candidate ids (the trainer passes train-split fraud so ground truth is
    never read off held-out nodes).
    """
    if cfg.oversample_count == 0:
        return list(base)
    if fraud_pool is None:
        fraud_pool = [r.id for r in g.records if r.label == 1]
    excluded = set(base) | set(g.neighbors(v)) | {v}
    cand = [c for c in fraud_pool if c not in excluded and g.record(c).label == 1]
    if not cand:
        return list(base)
    u = unit_features(g)
    uv = u[g.index_of(v)]
    sims = np.array([math.exp(float(np.dot(uv, u[g.index_of(c)]))) for c in cand])
    keep = sims >= cfg.similarity_floor
    cand = [c for c, k in zip(cand, keep) if k]
    sims = sims[keep]
    if not len(cand):
        return list(base)
    order = np.lexsort((np.array(cand), -sims))[: cfg.oversample_count]
    extras = sorted(int(cand[i]) for i in order)
    return list(base) + extras


def sample_neighborhood(
    g: TransactionGraph,
    v: int,
    k: int,
    cfg: SamplerConfig,
    oversample: bool = False,
    fraud_pool: list[int] | None = None,
) -> SampledNeighborhood:
    """Full per-node sampling: top-z filtering plus optional fraud over-sampling."""
    probs = selection_probabilities(g, v)
    selected = sample_topz(g, v, k, cfg)
    if oversample and g.record(v).label == 1:
        selected = oversample_fraud(g, v, selected, cfg, fraud_pool=fraud_pool)
    return SampledNeighborhood(
        node=v,
        selected=selected,
        probabilities=[probs.get(s, 0.0) for s in selected],
    )
