"""Walk through neighbor selection on a generated fraud scenario.

Every neighbor gets a score: the weight of the strongest proposition
connecting the pair times exp(cosine similarity of the feature vectors).
Normalizing the scores per node gives selection probabilities; the sampler
keeps the top z of them (or draws weighted without replacement), and fraud
nodes can pull in extra lookalike fraud from outside their neighborhood.
"""

from dataclasses import replace

import numpy as np

from fraudgnn.datagen import ScenarioConfig, generate
from fraudgnn.sampler import (
    SamplerConfig,
    sample_neighborhood,
    sample_topz,
    selection_probabilities,
    similarity,
)
from fraudgnn.tgraph import Proposition, build_graph, max_edge_weight


def banner(title):
    print()
    print(title)
    print("=" * len(title))


def main():
    scen = ScenarioConfig(n_legit=120, n_fraud=40, n_devices=8, n_ips=10,
                          feature_dim=6, time_span_seconds=6 * 3600, seed=11)
    records = generate(scen)
    props = [
        Proposition(name="same_device", field="device", weight=2,
                    window_seconds=3600),
        Proposition(name="same_ip", field="ip", weight=1,
                    window_seconds=3600),
    ]
    g = build_graph(records, props)
    print(f"scenario: {len(records)} records, {g.n_edges} edges")

    # the busiest node makes the nicest table
    v = max(g.node_ids(), key=lambda u: len(g.neighbors(u)))
    rec = g.record(v)
    nbrs = g.neighbors(v)
    print(f"focus node {v}: label={rec.label}, {len(nbrs)} neighbors")

    banner("per-neighbor selection probabilities")
    probs = selection_probabilities(g, v)
    print(f"  {'neighbor':>8} {'weight':>6} {'similarity':>10} {'P':>8}")
    top = sorted(probs, key=lambda u: -probs[u])[:10]
    for u in top:
        w = max_edge_weight(g, v, u)
        s = similarity(rec, g.record(u))
        print(f"  {u:>8} {w:>6} {s:>10.4f} {probs[u]:>8.4f}")
    print(f"  ... ({len(probs)} neighbors total, probabilities sum to "
          f"{sum(probs.values()):.12f})")

    banner("deterministic top-z versus weighted draws")
    cfg = SamplerConfig(z_hat=(6,), seed=0)
    kept = sample_topz(g, v, 0, cfg)
    print(f"  top-6 by probability: {kept}")
    weighted = replace(cfg, mode="weighted_without_replacement")
    draw_a = sample_topz(g, v, 0, weighted)
    draw_b = sample_topz(g, v, 0, weighted)
    print(f"  weighted draw:        {draw_a}")
    print(f"  weighted draw again:  {draw_b}  (same seed, same draw)")
    other_seed = replace(weighted, seed=99)
    print(f"  weighted, new seed:   {sample_topz(g, v, 0, other_seed)}")

    banner("fraud over-sampling")
    fraud = next(u for u in g.node_ids() if g.record(u).label == 1
                 and len(g.neighbors(u)) > 0)
    base = sample_neighborhood(g, fraud, 0, cfg)
    extended = sample_neighborhood(g, fraud, 0, cfg, oversample=True)
    extras = [u for u in extended.selected if u not in base.selected]
    labels = [g.record(u).label for u in extras]
    print(f"  fraud node {fraud}: top-z picks {len(base.selected)} neighbors")
    print(f"  over-sampling appends {len(extras)} non-adjacent lookalikes")
    print(f"  their labels: {labels}  (fraud only, by construction)")
    sims = [similarity(g.record(fraud), g.record(u)) for u in extras]
    if sims:
        print(f"  similarity range of extras: "
              f"{min(sims):.3f} .. {max(sims):.3f} "
              f"(floor is {cfg.similarity_floor:.3f})")
    probs_ext = dict(zip(extended.selected, extended.probabilities))
    print(f"  selection probability recorded for an extra: "
          f"{probs_ext[extras[0]] if extras else 'n/a'}")


if __name__ == "__main__":
    main()
