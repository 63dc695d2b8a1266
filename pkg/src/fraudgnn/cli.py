"""Command line front end.

Subcommands: generate, build-graph, train, predict, evaluate, ablate.
Every artifact is written atomically (temp file + rename) and gets a
`<name>.manifest` sibling recording the command, resolved config, seeds and
input digests, so runs can be reproduced byte for byte. Set FRAUDGNN_LOG to
DEBUG/INFO/WARNING to control verbosity.
"""

from __future__ import annotations

import argparse
import hashlib
import itertools
import logging
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .config import (RunConfig, dump_run_config, load_propositions,
                     load_run_config, load_scenario)
from .datagen import csv_text, generate, ingest_csv
from .errors import ConfigError, FraudGnnError, InputError
from .metrics import evaluate_scores, roc_points
from .model import checkpoint_text, load_params
from .tgraph import build_graph, serialize_graph
from .train import predict, train

log = logging.getLogger(__name__)


def _write_atomic(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".fraudgnn-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out_path: str, command: str, inputs: list[str],
                    config_text: str):
    lines = [
        f"command = {command}",
        f"version = {__version__}",
    ]
    for p in inputs:
        lines.append(f"input.{os.path.basename(p)} = sha256:{_sha256(p)}")
    body = "\n".join(lines) + "\n# resolved configuration\n" + config_text
    _write_atomic(out_path + ".manifest", body)


def _overrides(args) -> dict[str, str]:
    out = {}
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        out[key.strip()] = value.strip()
    if getattr(args, "seed", None) is not None:
        out["seed"] = str(args.seed)
        out.setdefault("sampler.seed", str(args.seed))
    return out


def _load_run(args) -> RunConfig:
    return load_run_config(getattr(args, "config", None), _overrides(args))


def _ingest(args, run: RunConfig):
    return ingest_csv(args.data, schema=run.schema, split=run.split,
                      seed=run.seed,
                      downsample_legit_ratio=run.downsample_legit_ratio)


def _apply_toggles(args, run: RunConfig) -> tuple[bool, bool]:
    """Returns (random_sampling, oversample) and mutates the model toggles."""
    baseline_mode = getattr(args, "model", "full") == "baseline"
    if baseline_mode or args.no_attention:
        run.model.use_attention = False
    if baseline_mode or args.no_gate:
        run.model.use_gate = False
    random_sampling = baseline_mode or args.random_sampling
    oversample = not (baseline_mode or args.no_oversample or random_sampling)
    return random_sampling, oversample


def _scores_csv(predictions) -> str:
    lines = ["id,p_fraud,label_pred"]
    for p in predictions:
        lines.append(f"{p.node_id},{repr(float(p.p_fraud))},{p.label_pred}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_generate(args) -> int:
    cfg = load_scenario(args.scenario)
    if args.seed is not None:
        cfg.seed = args.seed
    records = generate(cfg)
    _write_atomic(args.out, csv_text(records))
    _write_manifest(args.out, "generate", [args.scenario],
                    f"scenario.seed = {cfg.seed}\n")
    log.info("wrote %d records to %s", len(records), args.out)
    return 0


def cmd_build_graph(args) -> int:
    run = _load_run(args)
    props = load_propositions(args.props)
    result = _ingest(args, run)
    graph = build_graph(result.records, props)
    _write_atomic(args.out, serialize_graph(graph))
    _write_manifest(args.out, "build-graph", [args.data, args.props],
                    dump_run_config(run))
    log.info("graph: %d nodes, %d edges", graph.n_nodes, graph.n_edges)
    return 0


def cmd_train(args) -> int:
    run = _load_run(args)
    random_sampling, oversample = _apply_toggles(args, run)
    props = load_propositions(args.props)
    result = _ingest(args, run)
    graph = build_graph(result.records, props)
    tc = run.train_config(random_sampling=random_sampling,
                          oversample=oversample)
    outcome = train(graph, tc, train_ids=result.train_ids)
    _write_atomic(args.out, checkpoint_text(outcome.params))
    if args.loss_history:
        lines = ["epoch,loss"]
        lines += [f"{i},{repr(float(v))}"
                  for i, v in enumerate(outcome.loss_history, start=1)]
        _write_atomic(args.loss_history, "\n".join(lines) + "\n")
    _write_manifest(args.out, "train", [args.data, args.props],
                    dump_run_config(run))
    final = outcome.loss_history[-1] if outcome.loss_history else float("nan")
    log.info("trained %d epochs, final loss %.6f", tc.epochs, final)
    return 0


def cmd_predict(args) -> int:
    run = _load_run(args)
    params = load_params(args.ckpt)
    if len(run.sampler.z_hat) != params.config.k_layers:
        raise ConfigError(
            f"sampler.z_hat has {len(run.sampler.z_hat)} entries but the "
            f"checkpoint model has {params.config.k_layers} layers")
    props = load_propositions(args.props)
    result = _ingest(args, run)
    graph = build_graph(result.records, props)
    known = result.train_ids if args.known == "train" else None
    subset = {"all": None, "train": result.train_ids,
              "test": result.test_ids}[args.only]
    preds = predict(graph, params, sampler_cfg=run.sampler, nodes=subset,
                    known_ids=known, random_sampling=args.random_sampling,
                    seed=run.seed)
    _write_atomic(args.out, _scores_csv(preds))
    _write_manifest(args.out, "predict", [args.data, args.props, args.ckpt],
                    dump_run_config(run))
    log.info("scored %d nodes", len(preds))
    return 0


def _read_scores(path: str) -> tuple[list[int], np.ndarray]:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0].split(",")[:2] != ["id", "p_fraud"]:
        raise InputError(f"{path}: expected scores CSV with id,p_fraud header")
    ids, probs = [], []
    for ln in lines[1:]:
        parts = ln.split(",")
        ids.append(int(parts[0]))
        probs.append(float(parts[1]))
    return ids, np.array(probs)


def _read_labels(path: str) -> dict[int, int]:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    header = lines[0].split(",")
    if header[:3] != ["id", "timestamp", "label"]:
        raise InputError(f"{path}: expected data CSV starting id,timestamp,label")
    out = {}
    for ln in lines[1:]:
        parts = ln.split(",")
        out[int(parts[0])] = int(parts[2])
    return out


def cmd_evaluate(args) -> int:
    ids, probs = _read_scores(args.scores)
    labels_by_id = _read_labels(args.data)
    missing = [i for i in ids if i not in labels_by_id]
    if missing:
        raise InputError(
            f"scores reference ids missing from data: {missing[:5]}")
    labels = np.array([labels_by_id[i] for i in ids])
    report = evaluate_scores(labels, probs)
    _write_atomic(args.out, report.to_text())
    if args.roc:
        lines = ["fpr,tpr"]
        lines += [f"{repr(float(f))},{repr(float(t))}"
                  for f, t in roc_points(probs, labels)]
        _write_atomic(args.roc, "\n".join(lines) + "\n")
    _write_manifest(args.out, "evaluate", [args.scores, args.data], "")
    sys.stdout.write(report.to_text())
    return 0


def cmd_ablate(args) -> int:
    run = _load_run(args)
    props = load_propositions(args.props)
    result = _ingest(args, run)
    graph = build_graph(result.records, props)
    seeds = [int(s) for s in args.seeds.split(",")]
    test_rows = [graph.index_of(v) for v in result.test_ids]
    if not test_rows:
        raise InputError("ablate needs a non-empty test split; "
                         "check trainer.split settings")
    y_test = graph.labels()[test_rows]

    lines = ["sampling,attention,gate,seed,auc,f1,recall,precision"]
    for sampling, attention, gate in itertools.product(
            ("adaptive", "random"), ("on", "off"), ("on", "off")):
        for seed in seeds:
            cfg = load_run_config(getattr(args, "config", None),
                                  _overrides(args))
            cfg.seed = seed
            cfg.sampler.seed = seed
            cfg.model.use_attention = attention == "on"
            cfg.model.use_gate = gate == "on"
            tc = cfg.train_config(
                random_sampling=sampling == "random",
                oversample=sampling == "adaptive")
            outcome = train(graph, tc, train_ids=result.train_ids)
            preds = predict(graph, outcome.params, sampler_cfg=cfg.sampler,
                            nodes=result.test_ids,
                            known_ids=result.train_ids,
                            random_sampling=sampling == "random", seed=seed)
            p = np.array([x.p_fraud for x in preds])
            report = evaluate_scores(y_test, p)
            lines.append(
                f"{sampling},{attention},{gate},{seed},"
                f"{repr(float(report.auc))},{repr(float(report.f1))},"
                f"{repr(float(report.recall))},{repr(float(report.precision))}")
            log.info("ablate %s/%s/%s seed %d: auc %.4f",
                     sampling, attention, gate, seed, report.auc)
    _write_atomic(args.out, "\n".join(lines) + "\n")
    _write_manifest(args.out, "ablate", [args.data, args.props],
                    dump_run_config(run))
    sys.stdout.write("\n".join(lines) + "\n")
    return 0


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser, config: bool = True):
    if config:
        p.add_argument("--config", help="run config file (key = value lines)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key; repeatable")
        p.add_argument("--seed", type=int, help="override the top-level seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fraudgnn",
        description="Transaction fraud detection with an adaptive-sampling, "
                    "entropy-gated graph neural network.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("generate", help="write a synthetic transaction CSV")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("build-graph", help="serialize the transaction graph")
    p.add_argument("--data", required=True)
    p.add_argument("--props", required=True)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_build_graph)

    p = sub.add_parser("train", help="train a model, write a checkpoint")
    p.add_argument("--data", required=True)
    p.add_argument("--props", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--loss-history", help="write per-epoch losses as CSV")
    p.add_argument("--model", choices=("full", "baseline"), default="full")
    p.add_argument("--no-gate", action="store_true")
    p.add_argument("--no-attention", action="store_true")
    p.add_argument("--random-sampling", action="store_true")
    p.add_argument("--no-oversample", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="score nodes with a checkpoint")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--props", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--random-sampling", action="store_true",
                   help="sample neighborhoods uniformly instead of top-z")
    p.add_argument("--known", choices=("train", "none"), default="train",
                   help="whose stored labels may inform the diversity gate")
    p.add_argument("--only", choices=("all", "train", "test"), default="all",
                   help="which split to emit scores for")
    _add_common(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="metrics report from a scores CSV")
    p.add_argument("--scores", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--roc", help="also write ROC points as fpr,tpr CSV")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ablate", help="run the sampling x attention x gate grid")
    p.add_argument("--data", required=True)
    p.add_argument("--props", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seeds", default="0",
                   help="comma-separated seeds, one grid pass per seed")
    _add_common(p)
    p.set_defaults(func=cmd_ablate)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("FRAUDGNN_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FraudGnnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
