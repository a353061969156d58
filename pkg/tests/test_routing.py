"""Shortest-path fields, equal-split routing, and utilization accounting."""

from __future__ import annotations

import random

import pytest

from orbitlb.errors import RoutingError, ValidationError
from orbitlb.model import Link, NfviGraph, ServiceDemand
from orbitlb.routing import (
    allocation_csv_rows,
    ecmp_dag,
    format_number,
    max_link_utilization,
    route_all,
    route_demand_sfc,
    route_stream,
    select_waypoints,
    shortest_path_field,
    split_demand,
    unit_weights,
    validate_weights,
)
from tests.conftest import chain_graph, random_connected_graph

INF = float("inf")


def fan_graph(width: int) -> NfviGraph:
    """s -> m_i -> t over `width` parallel two-hop paths of equal length."""
    nodes = {"s": 0.0, "t": 0.0}
    links = []
    for i in range(width):
        m = f"m{i}"
        nodes[m] = 0.0
        links.append(Link(f"in{i}", "s", m, 100.0))
        links.append(Link(f"out{i}", m, "t", 100.0))
    return NfviGraph(nodes, tuple(links), frozenset(), {}, {})


def test_unit_weights_cover_all_links(diamond):
    w = unit_weights(diamond)
    assert set(w) == {"e_sa", "e_at", "e_sb", "e_bt"}
    assert set(w.values()) == {1}


def test_validate_weights_rejects_fractional_and_missing(diamond):
    w = unit_weights(diamond)
    with pytest.raises(ValidationError):
        validate_weights(diamond, {**w, "e_sa": 0})
    with pytest.raises(ValidationError):
        validate_weights(diamond, {k: v for k, v in w.items() if k != "e_bt"})


def test_shortest_distances_on_diamond(diamond):
    w = {"e_sa": 1, "e_at": 1, "e_sb": 1, "e_bt": 2}
    field = shortest_path_field(diamond, w)
    assert field.dist("s", "t") == 2.0
    assert field.dist("b", "t") == 2.0
    assert field.dist("t", "t") == 0.0
    assert field.dist("t", "s") == INF


def test_dag_keeps_only_tight_links(diamond):
    w = {"e_sa": 1, "e_at": 1, "e_sb": 1, "e_bt": 2}
    dag = ecmp_dag(diamond, w)
    by_id = {e.id: e for e in diamond.links}
    assert dag.on_shortest(by_id["e_sa"], "t")
    assert dag.on_shortest(by_id["e_at"], "t")
    assert not dag.on_shortest(by_id["e_sb"], "t")  # 1 + 2 > 2
    assert dag.on_shortest(by_id["e_bt"], "t")


def test_equal_split_on_diamond(diamond):
    dag = ecmp_dag(diamond, unit_weights(diamond))
    alloc = split_demand(diamond, dag, "s", "t", 4.0)
    assert alloc.link_flow == {"e_sa": 2.0, "e_at": 2.0, "e_sb": 2.0, "e_bt": 2.0}


def test_single_path_carries_everything():
    g = chain_graph([5.0, 5.0])
    dag = ecmp_dag(g, unit_weights(g))
    alloc = split_demand(g, dag, "v0", "v2", 7.0)
    assert alloc.link_flow == {"p0": 7.0, "p1": 7.0}


def test_three_way_fan_splits_equally():
    g = fan_graph(3)
    dag = ecmp_dag(g, unit_weights(g))
    alloc = split_demand(g, dag, "s", "t", 9.0)
    assert alloc.link_flow["in0"] == 3.0
    assert alloc.link_flow["out2"] == 3.0
    assert sum(alloc.link_flow.values()) == 18.0


def test_split_rejects_negative_amount(diamond):
    dag = ecmp_dag(diamond, unit_weights(diamond))
    with pytest.raises(ValidationError):
        split_demand(diamond, dag, "s", "t", -1.0)


def test_split_zero_amount_is_empty(diamond):
    dag = ecmp_dag(diamond, unit_weights(diamond))
    alloc = split_demand(diamond, dag, "s", "t", 0.0)
    assert alloc.link_flow == {}


def test_split_unreachable_raises(diamond):
    dag = ecmp_dag(diamond, unit_weights(diamond))
    with pytest.raises(RoutingError):
        split_demand(diamond, dag, "t", "s", 1.0)


def test_flow_conservation_randomized():
    rng = random.Random(101)
    for _ in range(60):
        g = random_connected_graph(rng, max_nodes=8)
        w = {e.id: rng.choice([1, 2, 3]) for e in g.links}
        src, dst = rng.sample(sorted(g.nodes), 2)
        amount = float(rng.randint(1, 9))
        alloc = split_demand(g, ecmp_dag(g, w), src, dst, amount)
        for v in g.nodes:
            inflow = sum(alloc.link_flow.get(e.id, 0.0) for e in g.in_links[v])
            outflow = sum(alloc.link_flow.get(e.id, 0.0) for e in g.out_links[v])
            if v == src:
                assert abs(outflow - inflow - amount) <= 1e-9
            elif v == dst:
                assert abs(inflow - outflow - amount) <= 1e-9
            else:
                assert abs(inflow - outflow) <= 1e-9


def test_split_scales_linearly():
    rng = random.Random(7)
    g = random_connected_graph(rng, max_nodes=7)
    w = {e.id: rng.choice([1, 2, 3]) for e in g.links}
    dag = ecmp_dag(g, w)
    src, dst = sorted(g.nodes)[:2]
    one = split_demand(g, dag, src, dst, 3.0)
    two = split_demand(g, dag, src, dst, 6.0)
    assert set(one.link_flow) == set(two.link_flow)
    for eid, val in one.link_flow.items():
        assert abs(two.link_flow[eid] - 2.0 * val) <= 1e-9


def test_dag_invariant_under_weight_scaling():
    rng = random.Random(13)
    g = random_connected_graph(rng, max_nodes=8)
    w = {e.id: rng.choice([1, 2, 3]) for e in g.links}
    doubled = {eid: 2 * val for eid, val in w.items()}
    d1 = ecmp_dag(g, w)
    d2 = ecmp_dag(g, doubled)
    for t in g.nodes:
        for e in g.links:
            assert d1.on_shortest(e, t) == d2.on_shortest(e, t)


def test_off_dag_links_carry_no_flow(diamond):
    w = {"e_sa": 1, "e_at": 1, "e_sb": 1, "e_bt": 2}
    alloc = split_demand(diamond, ecmp_dag(diamond, w), "s", "t", 8.0)
    assert alloc.link_flow.get("e_sb", 0.0) == 0.0
    assert alloc.link_flow["e_sa"] == 8.0


def test_path_decomposition_rebuilds_link_flow():
    rng = random.Random(23)
    for _ in range(30):
        g = random_connected_graph(rng, max_nodes=7)
        w = {e.id: rng.choice([1, 2]) for e in g.links}
        src, dst = rng.sample(sorted(g.nodes), 2)
        alloc = split_demand(g, ecmp_dag(g, w), src, dst, 5.0)
        rebuilt: dict[str, float] = {}
        total = 0.0
        for path, rate in alloc.path_flows(g):
            assert rate > 0
            total += rate
            at = src
            for eid in path:
                e = g.link_by_id[eid]
                assert e.src == at
                at = e.dst
                rebuilt[eid] = rebuilt.get(eid, 0.0) + rate
            assert at == dst
        assert abs(total - 5.0) <= 1e-9
        for eid, val in alloc.link_flow.items():
            assert abs(rebuilt.get(eid, 0.0) - val) <= 1e-6


def host_graph() -> NfviGraph:
    """Line a -> b -> c -> d with fw hosted at b and c."""
    nodes = {"a": 10.0, "b": 10.0, "c": 10.0, "d": 10.0}
    links = (
        Link("ab", "a", "b", 50.0),
        Link("bc", "b", "c", 50.0),
        Link("cd", "c", "d", 50.0),
    )
    return NfviGraph(
        nodes, links, frozenset({"fw"}), {("b", "fw"), ("c", "fw")}, {("b", "fw"): 2.0}
    )


def test_waypoints_pick_smallest_detour_then_id():
    g = host_graph()
    field = shortest_path_field(g, unit_weights(g))
    d = ServiceDemand(0, "a", "d", 1.0, ("fw",))
    # both hosts lie on the path (equal detour); tie broken by node id
    assert select_waypoints(g, field, d) == ("a", "b", "d")


def test_waypoints_respect_allowed_hosts():
    g = host_graph()
    field = shortest_path_field(g, unit_weights(g))
    d = ServiceDemand(0, "a", "d", 1.0, ("fw",))
    assert select_waypoints(g, field, d, allowed_hosts={"c"}) == ("a", "c", "d")
    assert select_waypoints(g, field, d, allowed_hosts=set()) is None


def test_route_demand_through_chain_counts_revisited_links():
    g = host_graph()
    d = ServiceDemand(0, "a", "d", 2.0, ("fw",))
    alloc = route_demand_sfc(g, unit_weights(g), d)
    assert alloc is not None
    assert alloc.waypoints == ("a", "b", "d")
    assert alloc.link_flow == {"ab": 2.0, "bc": 2.0, "cd": 2.0}


def test_route_demand_zero_volume_trivially_accepts():
    g = host_graph()
    d = ServiceDemand(0, "a", "d", 0.0, ("fw",))
    alloc = route_demand_sfc(g, unit_weights(g), d)
    assert alloc is not None
    assert alloc.link_flow == {}


def test_route_demand_without_host_rejects():
    g = host_graph()
    d = ServiceDemand(0, "a", "d", 1.0, ("nat",))
    assert route_demand_sfc(g, unit_weights(g), d) is None


def test_utilization_report_on_diamond(diamond):
    w = {"e_sa": 1, "e_at": 1, "e_sb": 1, "e_bt": 2}
    alloc = split_demand(diamond, ecmp_dag(diamond, w), "s", "t", 8.0)
    report = max_link_utilization(alloc, diamond)
    assert report.r == 0.8
    assert report.per_link["e_sa"] == 0.8
    assert report.over_capacity_links() == []


def test_node_usage_counts_capable_nodes_by_inflow():
    g = host_graph()
    d = ServiceDemand(0, "a", "d", 2.0, ("fw",))
    alloc = route_demand_sfc(g, unit_weights(g), d)
    report = max_link_utilization([alloc], g)
    # both hosts see inflow 2; only b prices fw (cost 2), c is free
    assert report.node_usage["b"] == 4.0
    assert report.node_usage["c"] == 0.0
    assert report.over_capacity_nodes(g) == []


def test_route_stream_rejects_over_capacity(diamond):
    demands = [
        ServiceDemand(0, "s", "t", 8.0, ()),
        ServiceDemand(1, "s", "t", 8.0, ()),
    ]
    w = {"e_sa": 1, "e_at": 1, "e_sb": 1, "e_bt": 2}
    result = route_stream(diamond, w, demands)
    assert result.accepted_ids == (0,)
    assert result.rejected_ids == (1,)
    assert result.acceptance_ratio == 0.5


def test_route_all_ignores_capacity(diamond):
    demands = [ServiceDemand(0, "s", "t", 8.0, ())]
    result = route_all(diamond, unit_weights(diamond), demands)
    assert result is not None
    assert result.report.r == 2.0  # equal split overloads the thin side


def test_route_all_none_when_unroutable():
    g = chain_graph([5.0])
    demands = [ServiceDemand(0, "v1", "v0", 1.0, ())]
    assert route_all(g, unit_weights(g), demands) is None


def test_allocation_csv_rows_shape(diamond):
    alloc = split_demand(diamond, ecmp_dag(diamond, unit_weights(diamond)), "s", "t", 4.0, 9)
    rows = allocation_csv_rows([alloc], diamond)
    assert "e_sa,9,0,2" in rows
    assert all(len(row.split(",")) == 4 for row in rows)


def test_format_number_canonical_forms():
    assert format_number(2.0) == "2"
    assert format_number(0.5) == "0.5"
    assert format_number(float("nan")) == "nan"
    assert format_number(float("inf")) == "inf"
    assert format_number(-3.0) == "-3"
