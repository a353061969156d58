"""Online admission: fraction updates, duals, rejections, and guarantees."""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

import pytest

from orbitlb.errors import ValidationError
from orbitlb.model import DemandStream, Link, NfviGraph, ServiceDemand
from orbitlb.oracle import exact_oracle
from orbitlb.orbit import (
    EVENT_HEADER,
    OrbitState,
    eligible_partitions,
    process_demand,
    run_stream,
    verify_guarantees,
)
from orbitlb.partition import Partition, Partitioning, partition
from tests.conftest import random_connected_graph, random_stream


def two_pair_graph() -> NfviGraph:
    """Ring a1-a2-b1-b2 with capacity-1 intra-pair links and wide cross links."""
    nodes = {"a1": 100.0, "a2": 100.0, "b1": 100.0, "b2": 100.0}
    pairs = [("a1", "a2", 1.0), ("a2", "b1", 5.0), ("b1", "b2", 1.0), ("b2", "a1", 5.0)]
    links = []
    for u, v, cap in pairs:
        links.append(Link(f"{u}_{v}", u, v, cap))
        links.append(Link(f"{v}_{u}", v, u, cap))
    return NfviGraph(nodes, tuple(links), frozenset(), (), {})


def two_pair_partitioning(epsilon: float) -> Partitioning:
    parts = (
        Partition(0, frozenset({"a1", "a2"}), ("a1_a2", "a2_a1"), 2.0),
        Partition(1, frozenset({"b1", "b2"}), ("b1_b2", "b2_b1"), 2.0),
    )
    return Partitioning(parts, kappa=2, epsilon=epsilon, seed=0, size_bound=4.0)


def test_first_demand_single_group_raises_fraction_to_one():
    # pi = 1, eps = 1, one group: a single sweep lands exactly on 1
    g = NfviGraph(
        {"a": 10.0, "b": 10.0},
        (Link("ab", "a", "b", 0.5), Link("ba", "b", "a", 0.5)),
        frozenset(),
        (),
        {},
    )
    part = partition(g, 1, 1.0)
    assert part.parts[0].pi == 1.0
    state = OrbitState(g, part)
    decision = process_demand(state, ServiceDemand(0, "a", "b", 0.25, ()))
    assert decision.accepted
    assert state.z == [1.0]
    assert state.zeta[0] == 1
    assert state.p_o == 1.0
    assert state.d_o == 1


def test_fraction_update_formula_two_groups():
    # pi = 2, eps = 3, |Q| = 2: two sweeps, z_i = 13/24 each
    g = two_pair_graph()
    state = OrbitState(g, two_pair_partitioning(epsilon=3.0))
    decision = process_demand(state, ServiceDemand(0, "a1", "a2", 0.5, ()))
    assert decision.accepted
    assert state.z[0] == pytest.approx(13 / 24, abs=1e-12)
    assert state.z[1] == pytest.approx(13 / 24, abs=1e-12)
    assert state.zeta[0] == 2
    assert state.d_o == 2
    assert state.p_o == pytest.approx(13 / 6, abs=1e-12)
    # shares split proportionally to equal fractions
    assert decision.shares[0] == pytest.approx(0.25, abs=1e-12)
    assert decision.shares[1] == pytest.approx(0.25, abs=1e-12)


def test_share_placement_conserves_volume():
    g = two_pair_graph()
    state = OrbitState(g, two_pair_partitioning(epsilon=1.0))
    d = ServiceDemand(0, "a1", "a2", 0.5, ())
    decision = process_demand(state, d)
    assert decision.accepted
    inflow = sum(
        decision.link_delta.get(e.id, 0.0) for e in g.in_links["a2"]
    )
    outflow = sum(
        decision.link_delta.get(e.id, 0.0) for e in g.out_links["a2"]
    )
    assert inflow - outflow == pytest.approx(0.5, abs=1e-12)
    for eid, val in decision.link_delta.items():
        assert state.chi[eid] == val


def test_no_eligible_group_rejects_but_keeps_bookkeeping():
    g = two_pair_graph()
    g2 = NfviGraph(
        dict.fromkeys(g.nodes, 100.0),
        g.links,
        frozenset({"fw"}),
        (),
        {},
    )
    state = OrbitState(g2, two_pair_partitioning(epsilon=1.0))
    decision = process_demand(state, ServiceDemand(0, "a1", "b1", 1.0, ("fw",)))
    assert not decision.accepted
    assert decision.reason == "no_eligible_partition"
    assert state.demand_q[0] == ()
    assert state.zeta[0] == 0
    assert state.z == [0.0, 0.0]
    assert state.events[-1].decision == "rejected"
    assert state.events[-1].sum_z == 0.0


def test_capacity_rejection_keeps_fractions_and_residuals():
    g = two_pair_graph()
    state = OrbitState(g, two_pair_partitioning(epsilon=1.0))
    before_link = dict(state.residual_link)
    decision = process_demand(state, ServiceDemand(0, "a1", "a2", 100.0, ()))
    assert not decision.accepted
    assert decision.reason == "capacity"
    assert state.residual_link == before_link
    assert state.zeta[0] >= 1  # sweeps persist
    assert sum(state.z) >= 1.0
    # a small follow-up needs no further sweeps and is admitted
    d_o_before = state.d_o
    decision2 = process_demand(state, ServiceDemand(1, "a1", "a2", 0.5, ()))
    assert decision2.accepted
    assert state.d_o == d_o_before


def test_duplicate_demand_id_rejected():
    g = two_pair_graph()
    state = OrbitState(g, two_pair_partitioning(epsilon=1.0))
    process_demand(state, ServiceDemand(0, "a1", "a2", 0.1, ()))
    with pytest.raises(ValidationError):
        process_demand(state, ServiceDemand(0, "a2", "a1", 0.1, ()))


def test_eligibility_rules():
    nodes = {"a": 10.0, "b": 0.0, "c": 10.0, "d": 10.0}
    links = tuple(
        Link(f"{u}_{v}", u, v, 10.0)
        for u, v in itertools.permutations("abcd", 2)
    )
    g = NfviGraph(
        nodes,
        links,
        frozenset({"fw", "dpi"}),
        {("a", "fw"), ("b", "dpi"), ("c", "dpi")},
        {},
    )
    parts = (
        Partition(0, frozenset({"a", "b"}), (), 1.0),
        Partition(1, frozenset({"c", "d"}), (), 1.0),
    )
    partng = Partitioning(parts, kappa=2, epsilon=2.0, seed=0, size_bound=4.0)
    chainless = ServiceDemand(0, "a", "c", 1.0, ())
    assert eligible_partitions(chainless, partng, g) == [0, 1]
    fw = ServiceDemand(1, "a", "c", 1.0, ("fw",))
    assert eligible_partitions(fw, partng, g) == [0]
    # b hosts dpi but has no compute budget left
    dpi = ServiceDemand(2, "a", "d", 1.0, ("dpi",))
    assert eligible_partitions(dpi, partng, g, g.node_capacity) == [1]
    assert eligible_partitions(dpi, partng, g) == [0, 1]  # without budgets
    both = ServiceDemand(3, "a", "d", 1.0, ("fw", "dpi"))
    assert eligible_partitions(both, partng, g, g.node_capacity) == []


def test_event_log_header_and_shape():
    g = two_pair_graph()
    state = OrbitState(g, two_pair_partitioning(epsilon=1.0))
    process_demand(state, ServiceDemand(0, "a1", "a2", 0.5, ()))
    lines = state.events_csv().splitlines()
    assert lines[0] == EVENT_HEADER
    fields = lines[1].split(",")
    assert len(fields) == 8
    assert fields[0] == "0" and fields[1] == "accepted" and fields[2] == ""


def test_fresh_state_reports_vacuous_success():
    g = two_pair_graph()
    state = OrbitState(g, two_pair_partitioning(epsilon=1.0))
    assert state.max_utilization() == 0.0
    assert state.acceptance_ratio() == 1.0
    report = verify_guarantees(state)
    assert report.ok
    assert "empirical_dual_scale" in report.render()


def test_injected_fault_is_flagged():
    g = two_pair_graph()
    state = run_stream(
        g,
        DemandStream((ServiceDemand(0, "a1", "a2", 0.5, ()),)),
        two_pair_partitioning(epsilon=1.0),
    )
    assert verify_guarantees(state).ok
    state.z[0] = 4.0  # beyond the provable fraction cap
    report = verify_guarantees(state)
    assert not report.ok
    assert any(c.name == "share_cap" and not c.ok for c in report.checks)
    assert "VIOLATED" in report.render()


def test_single_group_dual_scale_is_undefined():
    g = two_pair_graph()
    part = partition(g, 1, 1.0)
    state = run_stream(
        g, DemandStream((ServiceDemand(0, "a1", "b1", 0.5, ()),)), part
    )
    report = verify_guarantees(state)
    assert report.empirical_dual_scale is None
    assert "undefined" in report.render()


def test_guarantees_hold_on_random_streams():
    rng = random.Random(202)
    for _ in range(40):
        g = random_connected_graph(rng, max_nodes=10)
        kappa = rng.randint(1, min(3, len(g.nodes)))
        eps = float(rng.choice([1, 2, 3]))
        try:
            part = partition(g, kappa, eps, seed=rng.randint(0, 9))
        except Exception:
            continue
        state = run_stream(g, random_stream(rng, g), part)
        report = verify_guarantees(state)
        assert report.ok, report.render()


def cover_lp_opt(costs: list[Fraction], cover_sets: list[frozenset[int]]) -> Fraction:
    """Exact optimum of min c.z st sum_{i in S} z_i >= 1 per set, z >= 0,
    by vertex enumeration over tight-constraint subsets."""
    k = len(costs)
    rows: list[tuple[list[Fraction], Fraction]] = []
    for s in cover_sets:
        rows.append(([Fraction(1 if i in s else 0) for i in range(k)], Fraction(1)))
    for i in range(k):
        rows.append(([Fraction(1 if j == i else 0) for j in range(k)], Fraction(0)))
    best: Fraction | None = None
    for combo in itertools.combinations(range(len(rows)), k):
        a = [rows[i][0][:] for i in combo]
        b = [rows[i][1] for i in combo]
        # gaussian elimination; skip singular choices
        sol = _solve(a, b)
        if sol is None:
            continue
        if any(x < 0 for x in sol):
            continue
        if any(sum(row[i] * sol[i] for i in range(k)) < rhs for row, rhs in rows):
            continue
        value = sum(costs[i] * sol[i] for i in range(k))
        if best is None or value < best:
            best = value
    assert best is not None
    return best


def _solve(a: list[list[Fraction]], b: list[Fraction]) -> list[Fraction] | None:
    n = len(b)
    m = [row[:] + [b[i]] for i, row in enumerate(a)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
        if pivot is None:
            return None
        m[col], m[pivot] = m[pivot], m[col]
        inv = m[col][col]
        m[col] = [x / inv for x in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return [m[i][n] for i in range(n)]


def subset_host_instance() -> tuple[NfviGraph, Partitioning]:
    """Triangle of singleton groups; function f_S is hosted exactly on the
    nodes named by subset S, so a chain (f_S,) makes Q equal S."""
    names = ["n0", "n1", "n2"]
    links = tuple(
        Link(f"{u}_{v}", u, v, 1000.0)
        for u, v in itertools.permutations(names, 2)
    )
    fns = []
    caps = set()
    for bits in range(1, 8):
        fn = f"f{bits}"
        fns.append(fn)
        for i in range(3):
            if bits & (1 << i):
                caps.add((names[i], fn))
    g = NfviGraph({v: 1000.0 for v in names}, links, frozenset(fns), caps, {})
    part = partition(g, 3, 1.0)
    return g, part


def test_online_cost_within_twice_scaled_offline_optimum():
    g, part = subset_host_instance()
    names = sorted(g.nodes)
    rng = random.Random(33)
    for trial in range(20):
        demands = []
        for i in range(rng.randint(1, 25)):
            src, dst = rng.sample(names, 2)
            bits = rng.randint(1, 7)
            demands.append(ServiceDemand(i, src, dst, 0.001, (f"f{bits}",)))
        state = run_stream(g, DemandStream(tuple(demands)), part)
        assert verify_guarantees(state).ok
        if state.d_o == 0:
            continue
        loads = {
            p.index: sum(state.zeta[d_id] for d_id in state.q[p.index])
            for p in state.part.parts
        }
        sigma = max(loads[p.index] / p.pi for p in state.part.parts)
        cover_sets = [
            frozenset(q) for q in state.demand_q.values() if q
        ]
        opt = cover_lp_opt([Fraction(1)] * 3, cover_sets)
        # scaled duals are feasible for the covering LP, so D/sigma <= OPT
        assert state.d_o / sigma <= float(opt) + 1e-9
        assert state.p_o <= 2.0 * sigma * float(opt) + 1e-9


def test_single_group_with_oracle_weights_matches_offline_utilization():
    rng = random.Random(55)
    trials = 0
    while trials < 10:
        g = random_connected_graph(rng, max_nodes=4, capacity_choices=(50.0, 100.0))
        demands = DemandStream(
            tuple(
                ServiceDemand(i, *rng.sample(sorted(g.nodes), 2), float(rng.randint(1, 4)), ())
                for i in range(rng.randint(1, 6))
            )
        )
        if 2 ** len(g.links) > 10**6:
            continue
        oracle = exact_oracle(g, list(demands), w_max=2)
        if not oracle.feasible:
            continue
        part = partition(g, 1, 1.0)
        state = run_stream(g, demands, part, oracle.best_w)
        assert state.acceptance_ratio() == 1.0
        assert state.max_utilization() == pytest.approx(oracle.best_r, abs=1e-9)
        trials += 1
