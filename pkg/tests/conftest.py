"""Shared fixtures: a small hand-checkable record set and builder helpers."""

import numpy as np
import pytest

from fraudgnn.tgraph import Proposition, TransactionRecord, build_graph

# 2020-06-18 09:15 UTC, the base time for the six-record fixture
BASE_TS = 1_592_471_700


@pytest.fixture
def six_records():
    """Six transactions with hand-verifiable ip/mac overlap structure.

    ids 1..4 share an ip within minutes of each other; ids 5..6 sit on a
    second ip forty minutes apart. Two mac addresses repeat: 1 with 3, and
    2 with 5.
    """
    rows = [
        (1, 0, "10.168.31.193", "15-40-40-50-00-00", 800.0),
        (2, 300, "10.168.31.193", "11-40-50-50-00-00", 300.0),
        (3, 360, "10.168.31.193", "15-40-40-50-00-00", 200.0),
        (4, 600, "10.168.31.193", "12-40-50-50-00-00", 150.0),
        (5, 1200, "15.168.31.193", "11-40-50-50-00-00", 650.0),
        (6, 3600, "15.168.31.193", "12-40-00-50-00-00", 930.0),
    ]
    return [
        TransactionRecord(
            id=rid,
            attrs=np.array([amount / 1000.0, 1.0]),
            raw={"ip": ip, "mac": mac},
            timestamp=BASE_TS + offset,
            label=0,
        )
        for rid, offset, ip, mac, amount in rows
    ]


@pytest.fixture
def ip_mac_props():
    return [
        Proposition(name="same_ip", field="ip", weight=1, window_seconds=1800),
        Proposition(name="same_mac", field="mac", weight=1, window_seconds=1800),
    ]


@pytest.fixture
def six_graph(six_records, ip_mac_props):
    return build_graph(six_records, ip_mac_props)


def make_two_cluster_records(n: int, dim: int = 4, noise: float = 0.05,
                             seed: int = 0, window_step: int = 60):
    """Alternating-label records with orthogonal class features and
    class-pure device links (labels 0/1 on devices d0/d1)."""
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n):
        label = i % 2
        base = np.zeros(dim)
        base[label * (dim // 2)] = 1.0
        records.append(TransactionRecord(
            id=i,
            attrs=base + noise * rng.normal(size=dim),
            raw={"device": f"d{label}", "ip": "shared"},
            timestamp=window_step * i,
            label=label,
        ))
    return records


@pytest.fixture
def two_cluster_graph():
    records = make_two_cluster_records(20)
    props = [Proposition(name="dev", field="device", weight=1,
                         window_seconds=10_000)]
    return build_graph(records, props)
