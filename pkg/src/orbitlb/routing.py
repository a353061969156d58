"""Shortest-path fields, equal-split multipath DAGs, and traffic allocation.

Weights are positive integers per link.  For a destination t, a link e=(i,j)
lies on a shortest path to t exactly when dist(i,t) = w[e] + dist(j,t) with
dist(i,t) finite.  Traffic entering a node headed for t is divided equally
over all such outgoing links.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

from .errors import RoutingError, ValidationError
from .model import Link, NfviGraph, ServiceDemand

INF = math.inf

# absolute slack used when comparing float rates assembled through splits
RATE_TOL = 1e-9


def unit_weights(g: NfviGraph) -> dict[str, int]:
    return {e.id: 1 for e in g.links}


def validate_weights(g: NfviGraph, w: dict[str, int]) -> None:
    problems = []
    for e in g.links:
        if e.id not in w:
            problems.append(f"no weight for link {e.id}")
        else:
            val = w[e.id]
            if val != int(val) or val < 1:
                problems.append(f"weight of link {e.id} must be an integer >= 1, got {val!r}")
    if problems:
        raise ValidationError(problems)


class ShortestPathField:
    """Exact min-weight directed distance dist(v, t) for every node pair."""

    def __init__(self, dist: dict[str, dict[str, float]]) -> None:
        # dist[t][v] is the distance from v to t, math.inf when unreachable
        self._dist = dist

    def dist(self, v: str, t: str) -> float:
        return self._dist[t][v]

    def to_target(self, t: str) -> dict[str, float]:
        return self._dist[t]

    @property
    def targets(self) -> tuple[str, ...]:
        return tuple(self._dist)


def shortest_path_field(g: NfviGraph, w: dict[str, int]) -> ShortestPathField:
    """Distances from every node to every target, one reverse Dijkstra per
    target (weights are positive so Dijkstra is exact)."""
    validate_weights(g, w)
    dist: dict[str, dict[str, float]] = {}
    for t in g.node_capacity:
        d = {v: INF for v in g.node_capacity}
        d[t] = 0
        heap = [(0, t)]
        while heap:
            dv, v = heapq.heappop(heap)
            if dv > d[v]:
                continue
            for e in g.in_links.get(v, ()):
                if e.src not in d:
                    continue
                alt = dv + w[e.id]
                if alt < d[e.src]:
                    d[e.src] = alt
                    heapq.heappush(heap, (alt, e.src))
        dist[t] = d
    return ShortestPathField(dist)


class EcmpDag:
    """Per-destination subgraph of links lying on shortest paths."""

    def __init__(self, g: NfviGraph, w: dict[str, int], field: ShortestPathField) -> None:
        self.field = field
        self._out: dict[str, dict[str, list[Link]]] = {}
        for t in g.node_capacity:
            d = field.to_target(t)
            per_node: dict[str, list[Link]] = {}
            for e in g.links:
                if d[e.src] != INF and d[e.src] == w[e.id] + d[e.dst]:
                    per_node.setdefault(e.src, []).append(e)
            self._out[t] = per_node

    def on_shortest(self, e: Link, t: str) -> bool:
        return any(x.id == e.id for x in self._out[t].get(e.src, ()))

    def out_links(self, v: str, t: str) -> list[Link]:
        return self._out[t].get(v, [])


def ecmp_dag(g: NfviGraph, w: dict[str, int], field: ShortestPathField | None = None) -> EcmpDag:
    if field is None:
        field = shortest_path_field(g, w)
    return EcmpDag(g, w, field)


@dataclass(frozen=True)
class SegmentFlow:
    """Equal-split flow of one routing segment toward a single target."""

    entry: str
    exit: str
    amount: float
    link_flow: dict[str, float]
    node_share: dict[str, float]  # equal per-out-link rate assigned at a node


@dataclass
class FlowAllocation:
    """Traffic placed on links for one demand (possibly in waypoint segments).

    ``node_share[(v, t)]`` sums the equal per-link rates assigned at node v
    toward segment target t; ``link_flow`` sums all segments.
    """

    demand_id: int | None
    amount: float
    segment_flows: tuple[SegmentFlow, ...] = ()
    waypoints: tuple[str, ...] = ()
    chain: tuple[str, ...] = ()
    link_flow: dict[str, float] = field(default_factory=dict)
    node_share: dict[tuple[str, str], float] = field(default_factory=dict)

    def inflow_at(self, g: NfviGraph, v: str) -> float:
        return sum(self.link_flow.get(e.id, 0.0) for e in g.in_links.get(v, ()))

    def path_flows(self, g: NfviGraph) -> list[tuple[tuple[str, ...], float]]:
        """Decompose into end-to-end path flows (link-id sequences).

        Each segment's DAG flow is peeled into at most one path per link;
        segment path lists are then concatenated by repeatedly consuming the
        smallest leading rate, so the result stays below |E| paths.
        """
        per_segment = [
            _peel_paths(g, seg)
            for seg in self.segment_flows
            if seg.amount > RATE_TOL and seg.entry != seg.exit
        ]
        if not per_segment:
            return []
        merged = per_segment[0]
        for seg_paths in per_segment[1:]:
            merged = _zip_paths(merged, seg_paths)
        return [(tuple(p), rate) for p, rate in merged]


def _peel_paths(g: NfviGraph, seg: SegmentFlow) -> list[tuple[list[str], float]]:
    remaining = {eid: val for eid, val in seg.link_flow.items() if val > 0}
    tol = max(RATE_TOL, seg.amount * 1e-12)
    paths: list[tuple[list[str], float]] = []
    while True:
        path: list[str] = []
        v = seg.entry
        rate = INF
        while v != seg.exit:
            nxt = None
            for e in sorted(g.out_links.get(v, ()), key=lambda x: x.id):
                if remaining.get(e.id, 0.0) > tol:
                    nxt = e
                    break
            if nxt is None:
                break
            path.append(nxt.id)
            rate = min(rate, remaining[nxt.id])
            v = nxt.dst
        if v != seg.exit or not path:
            break
        for eid in path:
            left = remaining[eid] - rate
            remaining[eid] = left if left > tol else 0.0
        paths.append((path, rate))
    return paths


def _zip_paths(
    a: list[tuple[list[str], float]], b: list[tuple[list[str], float]]
) -> list[tuple[list[str], float]]:
    out: list[tuple[list[str], float]] = []
    ai = bi = 0
    a = [(p, r) for p, r in a]
    b = [(p, r) for p, r in b]
    ra = a[ai][1] if a else 0.0
    rb = b[bi][1] if b else 0.0
    while ai < len(a) and bi < len(b):
        take = min(ra, rb)
        out.append((a[ai][0] + b[bi][0], take))
        ra -= take
        rb -= take
        if ra <= RATE_TOL:
            ai += 1
            ra = a[ai][1] if ai < len(a) else 0.0
        if rb <= RATE_TOL:
            bi += 1
            rb = b[bi][1] if bi < len(b) else 0.0
    return out


def _empty_allocation(d_id: int | None, amount: float, waypoints: tuple[str, ...],
                      chain: tuple[str, ...]) -> FlowAllocation:
    return FlowAllocation(demand_id=d_id, amount=amount, waypoints=waypoints, chain=chain)


def split_demand(
    g: NfviGraph,
    dag: EcmpDag,
    entry: str,
    exit: str,
    amount: float,
    demand_id: int | None = None,
) -> FlowAllocation:
    """Equal-split allocation of ``amount`` from entry to exit over the
    shortest-path DAG toward exit.  Raises RoutingError when exit is
    unreachable (unless the amount is zero, which routes trivially)."""
    if amount < 0:
        raise ValidationError([f"negative traffic amount {amount}"])
    if amount == 0 or entry == exit:
        return _empty_allocation(demand_id, amount, (entry, exit), ())
    seg = _split_segment(g, dag, entry, exit, amount)
    alloc = FlowAllocation(
        demand_id=demand_id,
        amount=amount,
        segment_flows=(seg,),
        waypoints=(entry, exit),
        link_flow=dict(seg.link_flow),
        node_share={(v, exit): s for v, s in seg.node_share.items()},
    )
    return alloc


def _split_segment(g: NfviGraph, dag: EcmpDag, entry: str, exit: str, amount: float) -> SegmentFlow:
    dist = dag.field.to_target(exit)
    if dist.get(entry, INF) == INF:
        raise RoutingError(f"node {exit} is unreachable from {entry}")
    inflow: dict[str, float] = {entry: amount}
    link_flow: dict[str, float] = {}
    node_share: dict[str, float] = {}
    order = sorted(
        (v for v, dv in dist.items() if dv != INF),
        key=lambda v: (-dist[v], v),
    )
    for v in order:
        flow_in = inflow.get(v, 0.0)
        if v == exit or flow_in <= 0.0:
            continue
        outs = dag.out_links(v, exit)
        # every non-exit node at finite distance has a tight out-link
        share = flow_in / len(outs)
        node_share[v] = share
        for e in outs:
            link_flow[e.id] = link_flow.get(e.id, 0.0) + share
            inflow[e.dst] = inflow.get(e.dst, 0.0) + share
    return SegmentFlow(entry, exit, amount, link_flow, node_share)


def select_waypoints(
    g: NfviGraph,
    field: ShortestPathField,
    d: ServiceDemand,
    allowed_hosts: set[str] | None = None,
) -> tuple[str, ...] | None:
    """Hosting node per chain position: among capable nodes, pick the one
    minimizing dist(previous waypoint, v) + dist(v, destination), ties by
    smallest node id.  None when some position has no reachable host."""
    waypoints = [d.src]
    for fn in d.chain:
        prev = waypoints[-1]
        best: tuple[float, str] | None = None
        for v in g.node_capacity:
            if not g.can_host(v, fn):
                continue
            if allowed_hosts is not None and v not in allowed_hosts:
                continue
            cost = field.dist(prev, v) + field.dist(v, d.dst)
            if cost == INF:
                continue
            key = (cost, v)
            if best is None or key < best:
                best = key
        if best is None:
            return None
        waypoints.append(best[1])
    waypoints.append(d.dst)
    return tuple(waypoints)


def route_demand_sfc(
    g: NfviGraph,
    w: dict[str, int],
    d: ServiceDemand,
    amount: float | None = None,
    field: ShortestPathField | None = None,
    dag: EcmpDag | None = None,
    allowed_hosts: set[str] | None = None,
) -> FlowAllocation | None:
    """Route a demand through its function chain as concatenated equal-split
    segments.  Returns None (a rejection, not an error) when no feasible
    sequence of hosting nodes exists or the destination is unreachable."""
    if amount is None:
        amount = d.volume
    if amount < 0:
        raise ValidationError([f"negative traffic amount {amount}"])
    if field is None:
        field = shortest_path_field(g, w)
    if amount == 0:
        return _empty_allocation(d.id, 0.0, (d.src, d.dst), d.chain)
    waypoints = select_waypoints(g, field, d, allowed_hosts)
    if waypoints is None:
        return None
    if dag is None:
        dag = ecmp_dag(g, w, field)
    segments: list[SegmentFlow] = []
    link_flow: dict[str, float] = {}
    node_share: dict[tuple[str, str], float] = {}
    for a, b in zip(waypoints, waypoints[1:]):
        if a == b:
            continue
        if field.dist(a, b) == INF:
            return None
        seg = _split_segment(g, dag, a, b, amount)
        segments.append(seg)
        for eid, val in seg.link_flow.items():
            link_flow[eid] = link_flow.get(eid, 0.0) + val
        for v, s in seg.node_share.items():
            key = (v, b)
            node_share[key] = node_share.get(key, 0.0) + s
    return FlowAllocation(
        demand_id=d.id,
        amount=amount,
        segment_flows=tuple(segments),
        waypoints=waypoints,
        chain=d.chain,
        link_flow=link_flow,
        node_share=node_share,
    )


@dataclass
class UtilizationReport:
    """Link loads against bandwidth, compute usage against node capacity."""

    r: float
    chi: dict[str, float]
    per_link: dict[str, float]
    node_usage: dict[str, float]

    def over_capacity_links(self, tol: float = RATE_TOL) -> list[str]:
        return [eid for eid, u in self.per_link.items() if u > 1.0 + tol]

    def over_capacity_nodes(self, g: NfviGraph, tol: float = RATE_TOL) -> list[str]:
        return [
            v for v, used in self.node_usage.items()
            if used > g.node_capacity[v] + tol * max(1.0, g.node_capacity[v])
        ]


def max_link_utilization(
    allocs: FlowAllocation | list[FlowAllocation], g: NfviGraph
) -> UtilizationReport:
    """Aggregate link utilizations and per-node compute usage.

    Compute usage at node v counts, for every demand and every chain
    position the node can host, the demand's total incoming rate at v times
    the per-rate cost of that function; r is a ratio, never a gate.
    """
    if isinstance(allocs, FlowAllocation):
        allocs = [allocs]
    chi: dict[str, float] = {e.id: 0.0 for e in g.links}
    for alloc in allocs:
        for eid, val in alloc.link_flow.items():
            chi[eid] = chi.get(eid, 0.0) + val
    per_link = {e.id: (chi[e.id] / e.capacity) for e in g.links}
    r = max(per_link.values(), default=0.0)
    node_usage: dict[str, float] = {v: 0.0 for v in g.node_capacity}
    for alloc in allocs:
        if not alloc.chain:
            continue
        inflow_cache: dict[str, float] = {}
        for fn in alloc.chain:
            for v in g.node_capacity:
                if not g.can_host(v, fn):
                    continue
                if v not in inflow_cache:
                    inflow_cache[v] = alloc.inflow_at(g, v)
                node_usage[v] += g.cost(v, fn) * inflow_cache[v]
    return UtilizationReport(r=r, chi=chi, per_link=per_link, node_usage=node_usage)


@dataclass
class StreamResult:
    """Outcome of routing a whole demand sequence against fixed weights."""

    accepted_ids: tuple[int, ...]
    rejected_ids: tuple[int, ...]
    report: UtilizationReport
    allocations: tuple[FlowAllocation, ...]

    @property
    def acceptance_ratio(self) -> float:
        total = len(self.accepted_ids) + len(self.rejected_ids)
        return 1.0 if total == 0 else len(self.accepted_ids) / total


def route_stream(g: NfviGraph, w: dict[str, int], demands) -> StreamResult:
    """Route demands in order with capacity admission: commit each routable
    demand whose added load keeps every link within bandwidth and every node
    within compute, rejecting the rest."""
    field = shortest_path_field(g, w)
    dag = ecmp_dag(g, w, field)
    committed: list[FlowAllocation] = []
    chi: dict[str, float] = {e.id: 0.0 for e in g.links}
    usage: dict[str, float] = {v: 0.0 for v in g.node_capacity}
    accepted: list[int] = []
    rejected: list[int] = []
    for d in demands:
        alloc = route_demand_sfc(g, w, d, field=field, dag=dag)
        if alloc is None:
            rejected.append(d.id)
            continue
        delta_usage = _alloc_node_usage(alloc, g)
        fits = all(
            chi[eid] + val <= g.link_by_id[eid].capacity + RATE_TOL
            for eid, val in alloc.link_flow.items()
        ) and all(
            usage[v] + val <= g.node_capacity[v] + RATE_TOL * max(1.0, g.node_capacity[v])
            for v, val in delta_usage.items()
        )
        if not fits:
            rejected.append(d.id)
            continue
        for eid, val in alloc.link_flow.items():
            chi[eid] += val
        for v, val in delta_usage.items():
            usage[v] += val
        committed.append(alloc)
        accepted.append(d.id)
    return StreamResult(
        accepted_ids=tuple(accepted),
        rejected_ids=tuple(rejected),
        report=max_link_utilization(committed, g),
        allocations=tuple(committed),
    )


def route_all(g: NfviGraph, w: dict[str, int], demands) -> StreamResult | None:
    """Route every demand with no capacity gate; None when any demand is
    unroutable.  The report may show utilizations above 1, which callers
    judging joint feasibility (exhaustive weight search) inspect."""
    field = shortest_path_field(g, w)
    dag = ecmp_dag(g, w, field)
    allocs: list[FlowAllocation] = []
    for d in demands:
        alloc = route_demand_sfc(g, w, d, field=field, dag=dag)
        if alloc is None:
            return None
        allocs.append(alloc)
    return StreamResult(
        accepted_ids=tuple(d.id for d in demands),
        rejected_ids=(),
        report=max_link_utilization(allocs, g),
        allocations=tuple(allocs),
    )


def _alloc_node_usage(alloc: FlowAllocation, g: NfviGraph) -> dict[str, float]:
    usage: dict[str, float] = {}
    if not alloc.chain:
        return usage
    inflow_cache: dict[str, float] = {}
    for fn in alloc.chain:
        for v in g.node_capacity:
            if not g.can_host(v, fn):
                continue
            if v not in inflow_cache:
                inflow_cache[v] = alloc.inflow_at(g, v)
            usage[v] = usage.get(v, 0.0) + g.cost(v, fn) * inflow_cache[v]
    return usage


def allocation_csv_rows(allocs: list[FlowAllocation], g: NfviGraph) -> list[str]:
    """Rows ``link,demand,flow,rate`` from the path decomposition."""
    rows = []
    for alloc in allocs:
        for p, (path, rate) in enumerate(alloc.path_flows(g)):
            for eid in path:
                rows.append(f"{eid},{alloc.demand_id},{p},{format_number(rate)}")
    return rows


def format_number(x: float) -> str:
    """Canonical text for a float: integral values lose the trailing .0."""
    if x != x:
        return "nan"
    if x in (INF, -INF):
        return "inf" if x > 0 else "-inf"
    if x == int(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(x)
