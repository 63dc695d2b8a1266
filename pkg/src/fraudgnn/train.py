"""Training loop and inference for the gated attention model.

Each epoch: (re)sample neighborhoods per layer, refresh the per-node label
view (ground truth on training nodes, current hard predictions elsewhere),
derive diversity gates, then run seeded mini-batches of full-graph forward
passes with a mean binary cross-entropy loss on the batch rows and an Adam
step. Gates and neighbor choices are constants to the gradient.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import baseline, model as model_mod, nn, sampler as sampler_mod
from .datagen import SplitSpec, split_records
from .errors import CheckpointError, ConfigError, TrainError
from .model import ModelConfig, ModelParams, Neighborhoods
from .nn import Tensor
from .sampler import SamplerConfig, combine_seed
from .tgraph import TransactionGraph, UNLABELED

log = logging.getLogger(__name__)

BATCH_SEED_TAG = 3
SAMPLER_SEED_TAG = 4

PROB_CLAMP = 1e-7


@dataclass
class TrainConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    split: SplitSpec = field(default_factory=SplitSpec)
    lr: float = 0.001
    batch_size: int = 256
    epochs: int = 30
    seed: int = 0
    random_sampling: bool = False
    oversample: bool = True

    def __post_init__(self):
        if len(self.sampler.z_hat) != self.model.k_layers:
            raise ConfigError(
                f"sampler.z_hat has {len(self.sampler.z_hat)} entries but the "
                f"model has {self.model.k_layers} layers")
        if self.lr <= 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")


@dataclass
class Prediction:
    node_id: int
    p_fraud: float
    label_pred: int


@dataclass
class TrainResult:
    params: ModelParams
    loss_history: list[float]
    train_ids: list[int]


def bce_loss(y, y_hat) -> float:
    """Mean binary cross-entropy with probabilities clamped away from 0/1."""
    y = np.asarray(y, dtype=np.float64).ravel()
    p = np.clip(np.asarray(y_hat, dtype=np.float64).ravel(),
                PROB_CLAMP, 1.0 - PROB_CLAMP)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def _bce_tensor(y: np.ndarray, p: Tensor) -> Tensor:
    y_col = np.asarray(y, dtype=np.float64).reshape(-1, 1)
    p = nn.clamp(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
    keep = nn.mul(y_col, nn.log(p))
    drop = nn.mul(1.0 - y_col, nn.log(nn.sub(1.0, p)))
    return nn.neg(nn.mean_all(nn.add(keep, drop)))


def batch_loss(params: ModelParams, features: np.ndarray,
               neighborhoods: list[Neighborhoods], gates: np.ndarray | None,
               rows: np.ndarray, y: np.ndarray) -> Tensor:
    """Forward over the whole graph, loss on the selected rows only."""
    p_all = model_mod.forward(params, features, neighborhoods, gates)
    return _bce_tensor(y, nn.take_rows(p_all, rows))


def _sample_layers(graph: TransactionGraph, cfg: TrainConfig,
                   epoch: int, fraud_pool: list[int]) -> list[Neighborhoods]:
    """One Neighborhoods object per layer for this epoch."""
    out = []
    if cfg.random_sampling:
        for k in range(cfg.model.k_layers):
            rng = np.random.default_rng(np.random.SeedSequence(
                (cfg.seed, SAMPLER_SEED_TAG, epoch, k)))
            out.append(baseline.uniform_neighborhoods(
                graph, cfg.sampler.z_hat[k], rng))
        return out

    scfg = cfg.sampler
    if scfg.mode == "weighted_without_replacement":
        scfg = replace(scfg, seed=combine_seed(scfg.seed, epoch))
    oversample_ok = cfg.oversample and scfg.oversample_count > 0
    fraud_set = set(fraud_pool)
    for k in range(cfg.model.k_layers):
        sampled = []
        for rec in graph.records:
            sampled.append(sampler_mod.sample_neighborhood(
                graph, rec.id, k, scfg,
                oversample=oversample_ok and rec.id in fraud_set,
                fraud_pool=fraud_pool))
        out.append(model_mod.pack_neighborhoods(graph, sampled))
    return out


def _gates_for(cfg: ModelConfig, labels_eff: np.ndarray,
               nb_first: Neighborhoods) -> np.ndarray | None:
    if not cfg.use_gate:
        return None
    return model_mod.diversity_stats(labels_eff, nb_first).gate


def train(graph: TransactionGraph, config: TrainConfig,
          train_ids: list[int] | None = None) -> TrainResult:
    """Fit the model on the graph's training nodes; see the module docstring.

    Raises TrainError when the training labels are single-class, contain
    unlabeled nodes, or the loss leaves the finite range.
    """
    if train_ids is None:
        train_ids, _ = split_records(graph.records, config.split, config.seed)
    train_ids = sorted(train_ids)
    if not train_ids:
        raise TrainError("training split is empty")
    labels = graph.labels()
    train_rows = np.array([graph.index_of(v) for v in train_ids])
    y_train = labels[train_rows]
    if np.any(y_train == UNLABELED):
        raise TrainError("training split contains unlabeled records")
    classes = set(int(c) for c in np.unique(y_train))
    if classes != {0, 1}:
        raise TrainError(
            f"training labels must include both classes, found {sorted(classes)}")

    features = graph.features()
    params = model_mod.init_params(features.shape[1], config.model, config.seed)
    opt = nn.AdamState(params.parameters(), lr=config.lr)

    in_train = np.zeros(len(graph.records), dtype=bool)
    in_train[train_rows] = True
    labels_eff = np.where(in_train, np.maximum(labels, 0), 0)
    fraud_pool = sorted(int(v) for v, r in zip(train_ids, y_train) if r == 1)

    deterministic = (not config.random_sampling
                     and config.sampler.mode == "deterministic_topz")
    neighborhoods = None
    history: list[float] = []

    for epoch in range(1, config.epochs + 1):
        if neighborhoods is None or not deterministic:
            neighborhoods = _sample_layers(graph, config, epoch, fraud_pool)
        gates = _gates_for(config.model, labels_eff, neighborhoods[0])

        rng = np.random.default_rng(np.random.SeedSequence(
            (config.seed, BATCH_SEED_TAG, epoch)))
        perm = rng.permutation(len(train_rows))
        batch_losses = []
        for start in range(0, len(perm), config.batch_size):
            chunk = perm[start:start + config.batch_size]
            rows = train_rows[chunk]
            loss = batch_loss(params, features, neighborhoods, gates,
                              rows, labels[rows])
            value = loss.item()
            if not np.isfinite(value):
                raise TrainError(
                    f"non-finite loss {value} at epoch {epoch}, "
                    f"batch starting {start}")
            nn.backward(loss)
            opt.step()
            batch_losses.append(value)
        epoch_loss = float(np.mean(batch_losses))
        history.append(epoch_loss)
        log.info("epoch %d/%d loss %.6f", epoch, config.epochs, epoch_loss)

        p_all = model_mod.forward(params, features, neighborhoods, gates).data
        hard = (p_all.ravel() >= 0.5).astype(np.int64)
        labels_eff = np.where(in_train, np.maximum(labels, 0), hard)

    return TrainResult(params=params, loss_history=history,
                       train_ids=list(train_ids))


def predict(graph: TransactionGraph, params: ModelParams,
            sampler_cfg: SamplerConfig | None = None,
            nodes: list[int] | None = None,
            known_ids: list[int] | None = None,
            random_sampling: bool = False, seed: int = 0) -> list[Prediction]:
    """Score nodes with a trained model. Fraud over-sampling stays off.

    known_ids mark nodes whose stored labels may inform the diversity gate
    (normally the training split). Remaining nodes start as class 0, get a
    provisional hard prediction, and the pass repeats once with those labels.
    """
    features = graph.features()
    if features.shape[1] != params.feature_dim:
        raise CheckpointError(
            f"graph features have width {features.shape[1]} but the "
            f"checkpoint expects {params.feature_dim}")
    if sampler_cfg is None:
        z = tuple(10 for _ in range(params.config.k_layers))
        sampler_cfg = SamplerConfig(z_hat=z, seed=seed)
    cfg = TrainConfig(model=params.config, sampler=sampler_cfg,
                      epochs=0, seed=seed,
                      random_sampling=random_sampling, oversample=False)
    neighborhoods = _sample_layers(graph, cfg, 0, [])

    labels = graph.labels()
    known = np.zeros(len(graph.records), dtype=bool)
    for v in known_ids or []:
        row = graph.index_of(v)
        if labels[row] == UNLABELED:
            raise TrainError(f"known id {v} has no stored label")
        known[row] = True
    labels_eff = np.where(known, np.maximum(labels, 0), 0)

    gates = _gates_for(params.config, labels_eff, neighborhoods[0])
    p = model_mod.forward(params, features, neighborhoods, gates).data.ravel()
    if params.config.use_gate and not known.all():
        hard = (p >= 0.5).astype(np.int64)
        labels_eff = np.where(known, labels_eff, hard)
        gates = _gates_for(params.config, labels_eff, neighborhoods[0])
        p = model_mod.forward(params, features, neighborhoods, gates).data.ravel()

    if nodes is None:
        nodes = [rec.id for rec in graph.records]
    out = []
    for v in nodes:
        row = graph.index_of(v)
        out.append(Prediction(node_id=v, p_fraud=float(p[row]),
                              label_pred=int(p[row] >= 0.5)))
    return out
