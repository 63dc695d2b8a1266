"""Gated attention layers over sampled transaction neighborhoods.

A model is a stack of identical layers plus a two-logit output head. Each
layer attends over a node's sampled neighbors with scores damped by the
transaction time gap, scales the aggregated neighbor message by a
label-diversity gate, and applies a concat-update with row normalization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import nn
from .errors import CheckpointError, ConfigError, ShapeError
from .nn import Tensor
from .sampler import SampledNeighborhood
from .tgraph import TransactionGraph

ACTIVATIONS = {
    "relu": nn.relu,
    "tanh": nn.tanh,
    "sigmoid": nn.sigmoid,
    "identity": nn.identity,
}

TIME_MODES = ("decay", "interval")

CHECKPOINT_MAGIC = "fraudgnn-checkpoint"
CHECKPOINT_VERSION = 1

INIT_SEED_TAG = 2


@dataclass
class ModelConfig:
    """Architecture knobs shared by training and inference."""

    k_layers: int = 3
    hidden_dim: int = 32
    tau_seconds: float = 1800.0
    activation: str = "relu"
    time_mode: str = "decay"
    use_attention: bool = True
    use_gate: bool = True

    def __post_init__(self):
        if self.k_layers < 1:
            raise ConfigError(f"k_layers must be >= 1, got {self.k_layers}")
        if self.hidden_dim < 1:
            raise ConfigError(f"hidden_dim must be >= 1, got {self.hidden_dim}")
        if not self.tau_seconds > 0:
            raise ConfigError(f"tau_seconds must be positive, got {self.tau_seconds}")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(
                f"unknown activation {self.activation!r}; "
                f"choose from {sorted(ACTIVATIONS)}")
        if self.time_mode not in TIME_MODES:
            raise ConfigError(
                f"unknown time_mode {self.time_mode!r}; choose from {TIME_MODES}")


@dataclass
class LayerParams:
    """One layer's trainables.

    W combines concat(own state, gated neighbor message), so its row count is
    twice the input width. attn scores a neighbor pair from the projected
    states of both endpoints; the projection is W's neighbor-facing row block,
    so attn has one entry per projected output of each endpoint.
    """

    W: Tensor
    attn: Tensor

    @property
    def d_in(self) -> int:
        return self.W.rows // 2

    @property
    def d_out(self) -> int:
        return self.W.cols


@dataclass
class ModelParams:
    feature_dim: int
    config: ModelConfig
    layers: list[LayerParams] = field(default_factory=list)
    head: Tensor | None = None

    def parameters(self) -> list[Tensor]:
        out = []
        for layer in self.layers:
            out.append(layer.W)
            out.append(layer.attn)
        out.append(self.head)
        return out


def init_params(feature_dim: int, config: ModelConfig, seed: int) -> ModelParams:
    """Seeded glorot-uniform initialization for every layer and the head."""
    if feature_dim < 1:
        raise ConfigError(f"feature_dim must be >= 1, got {feature_dim}")
    rng = np.random.default_rng(np.random.SeedSequence((seed, INIT_SEED_TAG)))
    params = ModelParams(feature_dim=feature_dim, config=config)
    d_in = feature_dim
    for _ in range(config.k_layers):
        d_out = config.hidden_dim
        W = nn.glorot_uniform(2 * d_in, d_out, rng)
        attn = nn.glorot_uniform(2 * d_out, 1, rng)
        params.layers.append(LayerParams(W=W, attn=attn))
        d_in = d_out
    params.head = nn.glorot_uniform(d_in, 2, rng)
    return params


# ---------------------------------------------------------------------------
# neighborhood batching
# ---------------------------------------------------------------------------

@dataclass
class Neighborhoods:
    """Padded per-node neighbor indices for one layer.

    idx holds row positions into the node table, mask marks real entries,
    dt holds |timestamp gap| in seconds. Padding entries point at row 0 with
    mask False and contribute nothing downstream.
    """

    idx: np.ndarray
    mask: np.ndarray
    dt: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.idx.shape[0]

    @property
    def width(self) -> int:
        return self.idx.shape[1]


def pack_neighborhoods(graph: TransactionGraph,
                       sampled: list[SampledNeighborhood]) -> Neighborhoods:
    """Pad per-node samples into rectangular index/mask/gap arrays."""
    n = len(sampled)
    width = max((len(s.selected) for s in sampled), default=0)
    width = max(width, 1)
    idx = np.zeros((n, width), dtype=np.int64)
    mask = np.zeros((n, width), dtype=bool)
    dt = np.zeros((n, width), dtype=np.float64)
    ts = graph.timestamps()
    for row, s in enumerate(sampled):
        if graph.index_of(s.node) != row:
            raise ShapeError("sampled neighborhoods must follow graph node order")
        m = len(s.selected)
        if m == 0:
            continue
        cols = np.array([graph.index_of(v) for v in s.selected], dtype=np.int64)
        idx[row, :m] = cols
        mask[row, :m] = True
        dt[row, :m] = np.abs(ts[cols] - ts[row])
    return Neighborhoods(idx=idx, mask=mask, dt=dt)


def time_factors(nb: Neighborhoods, config: ModelConfig) -> np.ndarray:
    """Per-neighbor damping in (0,1] from the transaction time gap.

    decay mode shrinks with the gap (nearby interactions matter more).
    interval mode is the literal per-node min-max rescaling of the gap,
    kept behind the config switch; rows with a single distinct gap get 1.
    """
    if config.time_mode == "decay":
        out = np.exp(-nb.dt / config.tau_seconds)
    else:
        lo = np.where(nb.mask, nb.dt, np.inf).min(axis=1, keepdims=True)
        hi = np.where(nb.mask, nb.dt, -np.inf).max(axis=1, keepdims=True)
        span = hi - lo
        degenerate = ~np.isfinite(span) | (span <= 0)
        safe = np.where(degenerate, 1.0, span)
        out = np.where(degenerate, 1.0, (nb.dt - lo) / safe)
    return np.where(nb.mask, out, 0.0)


# ---------------------------------------------------------------------------
# diversity gate
# ---------------------------------------------------------------------------

def neighbor_diversity(labels: np.ndarray, nb: Neighborhoods) -> np.ndarray:
    """Label entropy of each node's sampled neighborhood (natural log).

    labels holds an effective 0/1 class per node row. Empty neighborhoods
    get diversity 0. Pure neighborhoods land on exactly 0.0 and balanced
    ones on exactly ln 2.
    """
    labels = np.asarray(labels)
    counts = nb.mask.sum(axis=1).astype(np.float64)
    ones = (labels[nb.idx] * nb.mask).sum(axis=1).astype(np.float64)
    safe = np.where(counts > 0, counts, 1.0)
    p1 = ones / safe
    p0 = (safe - ones) / safe

    def xlogx(p):
        return np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)

    d = -(xlogx(p0) + xlogx(p1))
    return np.where(counts > 0, d, 0.0)


def aggregation_gate(diversity: np.ndarray) -> np.ndarray:
    """Sigmoid of the negated batch-normalized diversity, one gate per node.

    Normalization uses the population variance with a 1e-5 guard inside the
    square root, so an all-equal batch maps to gates of exactly 0.5.
    """
    d = np.asarray(diversity, dtype=np.float64)
    mean = d.mean()
    var = d.var()
    norm = (d - mean) / np.sqrt(var + 1e-5)
    return 1.0 / (1.0 + np.exp(norm))


@dataclass
class DiversityStats:
    """Per-node diversity and the gates derived from it."""

    diversity: np.ndarray
    gate: np.ndarray


def diversity_stats(labels: np.ndarray, nb: Neighborhoods) -> DiversityStats:
    d = neighbor_diversity(labels, nb)
    return DiversityStats(diversity=d, gate=aggregation_gate(d))


# ---------------------------------------------------------------------------
# forward pass
# ---------------------------------------------------------------------------

def attention_weights(h_prev: Tensor, nb: Neighborhoods, layer: LayerParams,
                      config: ModelConfig) -> Tensor:
    """Per-neighbor coefficients: damped softmax of pair scores.

    Each endpoint is projected by W's neighbor-facing row block; the attn
    vector scores the concatenated projections, split here into a self part
    and a neighbor part so no pairwise concat is materialized. Scores pass
    through LeakyReLU, a masked softmax over each node's neighbors, and the
    time-gap damping. Rows with no neighbors come out all zero.
    """
    d_in, d_out = layer.d_in, layer.d_out
    proj = nn.matmul(h_prev, nn.slice_rows(layer.W, d_in, 2 * d_in))
    score_self = nn.matmul(proj, nn.slice_rows(layer.attn, 0, d_out))
    score_neigh = nn.matmul(proj, nn.slice_rows(layer.attn, d_out, 2 * d_out))
    raw = nn.add(score_self, nn.gather(score_neigh, nb.idx))
    alpha = nn.softmax_rows(nn.leaky_relu(raw), mask=nb.mask)
    return nn.mul(alpha, time_factors(nb, config))


def uniform_weights(nb: Neighborhoods) -> np.ndarray:
    """Plain averaging coefficients: 1/|neighbors| on real entries."""
    counts = nb.mask.sum(axis=1, keepdims=True).astype(np.float64)
    return np.where(nb.mask, 1.0 / np.where(counts > 0, counts, 1.0), 0.0)


def layer_forward(h_prev: Tensor, nb: Neighborhoods, layer: LayerParams,
                  gates: np.ndarray | None, config: ModelConfig) -> Tensor:
    """One layer: weighted neighbor sum, gate, concat update, row normalize.

    gates is a per-node column of constants (no gradient flows through it);
    pass None to skip gating (treated as all ones).
    """
    if h_prev.cols != layer.d_in:
        raise ShapeError(
            f"layer expects width {layer.d_in}, got {h_prev.cols}")
    if config.use_attention:
        weights = attention_weights(h_prev, nb, layer, config)
    else:
        weights = Tensor(uniform_weights(nb))
    h_agg = nn.neighbor_sum(weights, h_prev, nb.idx)
    if config.use_gate and gates is not None:
        h_agg = nn.mul(h_agg, np.asarray(gates).reshape(-1, 1))
    combined = nn.matmul(nn.concat(h_prev, h_agg), layer.W)
    activated = ACTIVATIONS[config.activation](combined)
    return nn.l2_normalize_rows(activated)


def forward(params: ModelParams, features: np.ndarray,
            neighborhoods: list[Neighborhoods],
            gates: np.ndarray | None) -> Tensor:
    """Full pass to fraud probabilities, one row per node, column shape (n,1)."""
    if len(neighborhoods) != params.config.k_layers:
        raise ShapeError(
            f"need {params.config.k_layers} neighborhood sets, "
            f"got {len(neighborhoods)}")
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != params.feature_dim:
        raise ShapeError(
            f"features must be (n, {params.feature_dim}), got {features.shape}")
    h = Tensor(features)
    for layer, nb in zip(params.layers, neighborhoods):
        h = layer_forward(h, nb, layer, gates, params.config)
    logits = nn.matmul(h, params.head)
    probs = nn.softmax_rows(logits)
    return nn.slice_cols(probs, 1, 2)


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------

def _tensor_lines(name: str, t: Tensor) -> list[str]:
    lines = [f"TENSOR {name} {t.rows} {t.cols}"]
    for row in t.data:
        lines.append(" ".join(float(x).hex() for x in row))
    return lines


def checkpoint_text(params: ModelParams) -> str:
    """Versioned text dump; floats stored as hex so round-trips are bit-exact."""
    cfg = params.config
    lines = [
        f"{CHECKPOINT_MAGIC} v{CHECKPOINT_VERSION}",
        f"feature_dim {params.feature_dim}",
        f"k_layers {cfg.k_layers}",
        f"hidden_dim {cfg.hidden_dim}",
        f"tau_seconds {repr(float(cfg.tau_seconds))}",
        f"activation {cfg.activation}",
        f"time_mode {cfg.time_mode}",
        f"use_attention {int(cfg.use_attention)}",
        f"use_gate {int(cfg.use_gate)}",
    ]
    for i, layer in enumerate(params.layers):
        lines.extend(_tensor_lines(f"layer{i}.W", layer.W))
        lines.extend(_tensor_lines(f"layer{i}.attn", layer.attn))
    lines.extend(_tensor_lines("head", params.head))
    lines.append("END")
    return "\n".join(lines) + "\n"


def save_params(params: ModelParams, path: str):
    with open(path, "w") as fh:
        fh.write(checkpoint_text(params))


def _read_tensor(lines: list[str], pos: int, expect_name: str) -> tuple[Tensor, int]:
    if pos >= len(lines):
        raise CheckpointError(f"checkpoint truncated before {expect_name}")
    parts = lines[pos].split()
    if len(parts) != 4 or parts[0] != "TENSOR" or parts[1] != expect_name:
        raise CheckpointError(
            f"expected tensor {expect_name!r} at line {pos + 1}, got {lines[pos]!r}")
    rows, cols = int(parts[2]), int(parts[3])
    if pos + rows >= len(lines):
        raise CheckpointError(f"checkpoint truncated inside tensor {expect_name}")
    data = np.empty((rows, cols), dtype=np.float64)
    for r in range(rows):
        fields = lines[pos + 1 + r].split()
        if len(fields) != cols:
            raise CheckpointError(
                f"tensor {expect_name}: row {r} has {len(fields)} values, "
                f"expected {cols}")
        try:
            data[r] = [float.fromhex(f) for f in fields]
        except ValueError:
            raise CheckpointError(
                f"tensor {expect_name}: row {r} holds a malformed value") from None
    return Tensor(data, requires_grad=True), pos + 1 + rows


def load_params(path: str) -> ModelParams:
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or not lines[0].startswith(CHECKPOINT_MAGIC):
        raise CheckpointError(f"not a model checkpoint: {path}")
    version = lines[0].split()[-1]
    if version != f"v{CHECKPOINT_VERSION}":
        raise CheckpointError(f"unsupported checkpoint version {version}")

    header: dict[str, str] = {}
    pos = 1
    while pos < len(lines) and not lines[pos].startswith("TENSOR"):
        key, _, value = lines[pos].partition(" ")
        header[key] = value
        pos += 1
    try:
        config = ModelConfig(
            k_layers=int(header["k_layers"]),
            hidden_dim=int(header["hidden_dim"]),
            tau_seconds=float(header["tau_seconds"]),
            activation=header["activation"],
            time_mode=header["time_mode"],
            use_attention=bool(int(header["use_attention"])),
            use_gate=bool(int(header["use_gate"])),
        )
        feature_dim = int(header["feature_dim"])
    except KeyError as exc:
        raise CheckpointError(f"checkpoint header missing field {exc}") from None

    params = ModelParams(feature_dim=feature_dim, config=config)
    d_in = feature_dim
    for i in range(config.k_layers):
        W, pos = _read_tensor(lines, pos, f"layer{i}.W")
        attn, pos = _read_tensor(lines, pos, f"layer{i}.attn")
        if W.shape != (2 * d_in, config.hidden_dim):
            raise CheckpointError(
                f"layer{i}.W has shape {W.shape}, expected "
                f"{(2 * d_in, config.hidden_dim)}")
        if attn.shape != (2 * config.hidden_dim, 1):
            raise CheckpointError(
                f"layer{i}.attn has shape {attn.shape}, expected "
                f"{(2 * config.hidden_dim, 1)}")
        params.layers.append(LayerParams(W=W, attn=attn))
        d_in = config.hidden_dim
    head, pos = _read_tensor(lines, pos, "head")
    if head.shape != (d_in, 2):
        raise CheckpointError(
            f"head has shape {head.shape}, expected {(d_in, 2)}")
    params.head = head
    if pos >= len(lines) or lines[pos] != "END":
        raise CheckpointError("checkpoint missing END marker")
    return params
