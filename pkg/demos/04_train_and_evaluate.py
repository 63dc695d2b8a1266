"""Train the full model on a camouflaged scenario and score the held-out split.

A slice of the fraud records is generated with legitimate-looking features
and a legitimate anchor's ip and time slot, so their feature vectors alone
cannot give them away; only the shared fraud device subgraph can. Training
sees 30 percent of the records, evaluation reports on the other 70.
"""

import numpy as np

from fraudgnn.datagen import (
    ScenarioConfig,
    SplitSpec,
    cluster_centers,
    generate,
    split_records,
)
from fraudgnn.metrics import evaluate_scores
from fraudgnn.model import ModelConfig
from fraudgnn.sampler import SamplerConfig
from fraudgnn.tgraph import Proposition, build_graph
from fraudgnn.train import TrainConfig, predict, train


def banner(title):
    print()
    print(title)
    print("=" * len(title))


def main():
    seed = 0
    scen = ScenarioConfig(n_legit=700, n_fraud=300, n_devices=10, n_ips=15,
                          camouflage_rate=0.3, cluster_separation=4.0,
                          time_span_seconds=6 * 3600, seed=seed)
    records = generate(scen)
    props = [
        Proposition(name="same_device", field="device", weight=3,
                    window_seconds=3600),
        Proposition(name="same_ip", field="ip", weight=1,
                    window_seconds=3600),
    ]
    graph = build_graph(records, props)
    train_ids, test_ids = split_records(
        records, SplitSpec(kind="fraction", test_fraction=0.7), seed)
    n_camo = round(scen.camouflage_rate * scen.n_fraud)
    print(f"{len(records)} records ({n_camo} camouflaged fraud), "
          f"{graph.n_edges} edges, train {len(train_ids)} / "
          f"test {len(test_ids)}")

    banner("training")
    tc = TrainConfig(
        model=ModelConfig(k_layers=2, hidden_dim=8, tau_seconds=21600.0),
        sampler=SamplerConfig(z_hat=(8, 8), seed=seed),
        lr=0.01, batch_size=256, epochs=30, seed=seed)
    result = train(graph, tc, train_ids=train_ids)
    hist = result.loss_history
    for e in (0, 4, 9, 19, len(hist) - 1):
        print(f"  epoch {e + 1:>2}: loss {hist[e]:.4f}")

    banner("held-out evaluation")
    preds = predict(graph, result.params, sampler_cfg=tc.sampler,
                    nodes=test_ids, known_ids=train_ids, seed=seed)
    truth = {r.id: r.label for r in records}
    labels = np.array([truth[p.node_id] for p in preds])
    scores = np.array([p.p_fraud for p in preds])
    report = evaluate_scores(labels, scores)
    print(report.to_text())

    # how does the camouflaged slice fare on its own? camouflaged fraud is
    # the fraud whose features sit in the legitimate cluster (noise is capped
    # below half the separation, so nearest-center is exact)
    mu_legit, mu_fraud = cluster_centers(scen)
    camo_ids = {r.id for r in records if r.label == 1
                and np.linalg.norm(r.attrs - mu_legit)
                < np.linalg.norm(r.attrs - mu_fraud)}
    camo_scores = [p.p_fraud for p in preds if p.node_id in camo_ids]
    legit_scores = [p.p_fraud for p in preds if truth[p.node_id] == 0]
    if camo_scores:
        caught = sum(s >= 0.5 for s in camo_scores)
        print(f"camouflaged fraud in the test split: {len(camo_scores)}, "
              f"flagged at 0.5: {caught}")
        print(f"median score: camouflaged fraud {np.median(camo_scores):.3f} "
              f"vs legitimate {np.median(legit_scores):.3f}")
        print("the hard threshold misses most of the camouflage, but the")
        print("graph still ranks it well above legitimate traffic, which is")
        print("what the AUC above reflects.")


if __name__ == "__main__":
    main()
