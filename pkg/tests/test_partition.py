"""Balanced node partitioning and per-group connection cost."""

from __future__ import annotations

import random

import pytest

from orbitlb.errors import PartitionError
from orbitlb.model import Link, NfviGraph
from orbitlb.partition import _mst_bandwidth, _pair_capacity, partition
from tests.conftest import random_connected_graph


def test_single_group_cost_is_spanning_tree_bandwidth(diamond):
    part = partition(diamond, 1, 1.0)
    assert len(part.parts) == 1
    assert part.parts[0].nodes == frozenset({"s", "a", "b", "t"})
    # spanning tree of the undirected diamond: 10 + 10 + 2 (or 10+10+2 via b)
    assert part.parts[0].pi == 14.0


def test_pair_capacity_sums_both_directions():
    g = NfviGraph(
        {"a": 0.0, "b": 0.0},
        (Link("ab", "a", "b", 3.0), Link("ba", "b", "a", 5.0)),
        frozenset(),
        (),
        {},
    )
    assert _pair_capacity(g) == {("a", "b"): 8.0}


def test_mst_bandwidth_of_disconnected_set_spans_components():
    pc = {("a", "b"): 2.0}
    assert _mst_bandwidth(frozenset({"a", "b", "c"}), pc) == 2.0


def test_group_cost_clamped_to_one():
    # three isolated nodes: spanning bandwidth 0, clamped
    g = NfviGraph({"a": 0.0, "b": 0.0, "c": 0.0}, (), frozenset(), (), {})
    part = partition(g, 3, 1.0)
    assert all(p.pi == 1.0 for p in part.parts)


def test_balance_bound_holds_on_random_graphs():
    rng = random.Random(5)
    for _ in range(40):
        g = random_connected_graph(rng, max_nodes=10)
        n = len(g.nodes)
        kappa = rng.randint(1, min(3, n))
        eps = float(rng.choice([1, 2, 3]))
        try:
            part = partition(g, kappa, eps, seed=rng.randint(0, 99))
        except PartitionError:
            assert int(eps * n / kappa) * kappa < n
            continue
        assert part.verify(g) == []
        assert len(part.parts) == kappa
        for p in part.parts:
            assert len(p.nodes) <= eps * n / kappa + 1e-9


def test_same_seed_reproduces_partitioning():
    rng = random.Random(17)
    g = random_connected_graph(rng, max_nodes=10, min_nodes=8)
    a = partition(g, 3, 2.0, seed=4)
    b = partition(g, 3, 2.0, seed=4)
    assert [p.nodes for p in a.parts] == [p.nodes for p in b.parts]
    assert [p.pi for p in a.parts] == [p.pi for p in b.parts]


def test_different_seeds_may_differ_but_stay_valid():
    rng = random.Random(18)
    g = random_connected_graph(rng, max_nodes=10, min_nodes=10)
    for seed in range(5):
        assert partition(g, 2, 1.0, seed=seed).verify(g) == []


def test_part_of_maps_every_node(diamond):
    part = partition(diamond, 2, 1.0)
    for v in diamond.nodes:
        assert v in part.parts[part.part_of(v)].nodes


def test_rejects_bad_group_counts(diamond):
    with pytest.raises(PartitionError):
        partition(diamond, 0, 1.0)
    with pytest.raises(PartitionError):
        partition(diamond, 5, 1.0)  # more groups than nodes


def test_rejects_balance_factor_below_one(diamond):
    with pytest.raises(PartitionError):
        partition(diamond, 2, 0.5)


def test_rejects_unsatisfiable_bound():
    # 22 nodes, 3 groups, factor 1: floor(22/3) * 3 = 21 < 22
    nodes = {f"v{i}": 0.0 for i in range(22)}
    links = tuple(
        Link(f"e{i}", f"v{i}", f"v{(i + 1) % 22}", 10.0) for i in range(22)
    )
    g = NfviGraph(nodes, links, frozenset(), (), {})
    with pytest.raises(PartitionError) as exc:
        partition(g, 3, 1.0)
    assert "cannot cover" in str(exc.value)


def test_empty_graph_rejected():
    g = NfviGraph({}, (), frozenset(), (), {})
    with pytest.raises(PartitionError):
        partition(g, 1, 1.0)
