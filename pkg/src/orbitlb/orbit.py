"""Online admission and multipath placement over balanced partitions.

Demands arrive one at a time.  Each group i keeps a traffic fraction z_i,
raised while the eligible groups' fractions sum below 1 by

    z_i <- z_i * (1 + 1/(pi_i * epsilon)) + 1/(pi_i * |Q(d)|)

where Q(d) is the set of groups able to host the demand's whole chain and
pi_i is the group's spanning-tree bandwidth cost.  One dual unit is charged
per raising sweep.  The demand's volume then splits across eligible groups
proportionally to z_i and each share is routed by equal-cost splitting on
the group's internal links plus shortest-path ramps from the source into
the group and from the group to the destination.  If the combined placement
exceeds any residual link bandwidth or node compute, the demand is rejected;
fraction and dual changes persist either way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ValidationError
from .model import NfviGraph, ServiceDemand
from .partition import Partitioning
from .routing import (
    EcmpDag,
    FlowAllocation,
    RATE_TOL,
    ShortestPathField,
    _alloc_node_usage,
    ecmp_dag,
    format_number,
    route_demand_sfc,
    shortest_path_field,
    unit_weights,
    validate_weights,
)

INF = math.inf
GUARANTEE_TOL = 1e-9

EVENT_HEADER = "demand_id,decision,reason,sum_z,P_o,D_o,r_current,acceptance_ratio"


@dataclass(frozen=True)
class EventRecord:
    demand_id: int
    decision: str  # "accepted" | "rejected"
    reason: str  # "" | "no_eligible_partition" | "capacity"
    sum_z: float
    p_o: float
    d_o: int
    r_current: float
    acceptance_ratio: float

    def csv_row(self) -> str:
        return ",".join(
            [
                str(self.demand_id),
                self.decision,
                self.reason,
                format_number(self.sum_z),
                format_number(self.p_o),
                str(self.d_o),
                format_number(self.r_current),
                format_number(self.acceptance_ratio),
            ]
        )


@dataclass(frozen=True)
class AdmissionDecision:
    demand_id: int
    accepted: bool
    reason: str
    shares: dict[int, float]
    allocations: dict[int, FlowAllocation]
    link_delta: dict[str, float]
    node_delta: dict[str, float]


class OrbitState:
    """Mutable run state: fractions, duals, residual capacities, history.

    Single-writer: demands must be processed strictly one at a time.
    """

    def __init__(
        self,
        g: NfviGraph,
        partitioning: Partitioning,
        w: dict[str, int] | None = None,
    ) -> None:
        self.g = g
        self.part = partitioning
        self.w = dict(w) if w is not None else unit_weights(g)
        validate_weights(g, self.w)
        self.field: ShortestPathField = shortest_path_field(g, self.w)
        self.dag: EcmpDag = ecmp_dag(g, self.w, self.field)
        k = partitioning.kappa
        self.z: list[float] = [0.0] * k
        self.zeta: dict[int, int] = {}
        self.q: dict[int, set[int]] = {i: set() for i in range(k)}
        self.demand_q: dict[int, tuple[int, ...]] = {}
        self.residual_link: dict[str, float] = {e.id: e.capacity for e in g.links}
        self.residual_node: dict[str, float] = dict(g.node_capacity)
        self.chi: dict[str, float] = {e.id: 0.0 for e in g.links}
        self.p_o: float = 0.0
        self.d_o: int = 0
        self.trace: list[tuple[int, float, int]] = []
        self.events: list[EventRecord] = []
        self.accepted_count: int = 0
        self.processed_count: int = 0
        self._subgraphs: dict[
            tuple[int, str, str], tuple[NfviGraph, ShortestPathField, EcmpDag] | None
        ] = {}

    def max_utilization(self) -> float:
        vals = [self.chi[e.id] / e.capacity for e in self.g.links]
        return max(vals, default=0.0)

    def acceptance_ratio(self) -> float:
        if self.processed_count == 0:
            return 1.0
        return self.accepted_count / self.processed_count

    def events_csv(self) -> str:
        lines = [EVENT_HEADER]
        lines.extend(ev.csv_row() for ev in self.events)
        return "\n".join(lines) + "\n"


def eligible_partitions(
    d: ServiceDemand, part: Partitioning, g: NfviGraph,
    residual_node: dict[str, float] | None = None,
) -> list[int]:
    """Groups able to host every function of the chain on some member node
    with compute left.  An empty chain makes every group eligible."""
    out = []
    for p in part.parts:
        ok = True
        for fn in d.chain:
            if not any(
                g.can_host(v, fn)
                and (residual_node is None or residual_node[v] > 0)
                for v in p.nodes
            ):
                ok = False
                break
        if ok:
            out.append(p.index)
    return out


def _dag_segment_links(dag: EcmpDag, src: str, target: str) -> set[str]:
    """Links on any shortest path from src toward target (forward walk over
    the target's shortest-path subgraph)."""
    seen = {src}
    frontier = [src]
    links: set[str] = set()
    while frontier:
        v = frontier.pop()
        if v == target:
            continue
        for e in dag.out_links(v, target):
            links.add(e.id)
            if e.dst not in seen:
                seen.add(e.dst)
                frontier.append(e.dst)
    return links


def _share_subgraph(
    state: OrbitState, i: int, d: ServiceDemand
) -> tuple[NfviGraph, ShortestPathField, EcmpDag] | None:
    """The group's internal links plus entry/exit ramps for this demand's
    endpoints, with hosting restricted to group members.  None when the
    group cannot be reached from the source or cannot reach the destination.
    """
    key = (i, d.src, d.dst)
    if key in state._subgraphs:
        return state._subgraphs[key]
    part = state.part.parts[i]
    g = state.g

    def closest(dist_of) -> str | None:
        best: tuple[float, str] | None = None
        for v in sorted(part.nodes):
            dist = dist_of(v)
            if dist == INF:
                continue
            if best is None or (dist, v) < best:
                best = (dist, v)
        return best[1] if best else None

    v_in = closest(lambda v: state.field.dist(d.src, v))
    v_out = closest(lambda v: state.field.dist(v, d.dst))
    if v_in is None or v_out is None:
        state._subgraphs[key] = None
        return None
    link_ids = set(part.link_ids)
    if v_in != d.src:
        link_ids |= _dag_segment_links(state.dag, d.src, v_in)
    if v_out != d.dst:
        link_ids |= _dag_segment_links(state.dag, v_out, d.dst)
    sub = g.restricted(
        link_ids,
        extra_nodes={d.src, d.dst, v_in, v_out} | set(part.nodes),
        capability_nodes=part.nodes,
    )
    w_sub = {eid: state.w[eid] for eid in sub.link_ids}
    f_sub = shortest_path_field(sub, w_sub)
    dag_sub = ecmp_dag(sub, w_sub, f_sub)
    entry = (sub, f_sub, dag_sub)
    state._subgraphs[key] = entry
    return entry


def _route_share(
    state: OrbitState, i: int, d: ServiceDemand, amount: float
) -> FlowAllocation | None:
    if amount == 0:
        return FlowAllocation(demand_id=d.id, amount=0.0, waypoints=(d.src, d.dst),
                              chain=d.chain)
    entry = _share_subgraph(state, i, d)
    if entry is None:
        return None
    sub, f_sub, dag_sub = entry
    hosts = {v for v in state.part.parts[i].nodes if state.residual_node[v] > 0}
    sub_w = {eid: state.w[eid] for eid in sub.link_ids}
    return route_demand_sfc(
        sub, sub_w, d, amount=amount, field=f_sub, dag=dag_sub, allowed_hosts=hosts
    )


def process_demand(state: OrbitState, d: ServiceDemand) -> AdmissionDecision:
    """Admit or reject one arriving demand, updating fractions and duals.

    Raising sweeps run while the eligible fractions sum below 1; fraction
    and dual increases persist even when the demand is then rejected for
    capacity, and only accepted demands change residual capacities.
    """
    if d.id in state.demand_q:
        raise ValidationError([f"demand {d.id} was already processed"])
    state.processed_count += 1
    q_ids = eligible_partitions(d, state.part, state.g, state.residual_node)
    for i in q_ids:
        state.q[i].add(d.id)
    state.demand_q[d.id] = tuple(q_ids)
    state.zeta[d.id] = 0
    if not q_ids:
        return _finish(state, d, False, "no_eligible_partition", {}, {}, {}, {}, 0.0)

    eps = state.part.epsilon
    while sum(state.z[i] for i in q_ids) < 1.0:
        d_p = 0.0
        for i in q_ids:
            pi = state.part.parts[i].pi
            old = state.z[i]
            new = old * (1.0 + 1.0 / (pi * eps)) + 1.0 / (pi * len(q_ids))
            state.z[i] = new
            d_p += pi * (new - old)
        state.zeta[d.id] += 1
        state.p_o += d_p
        state.d_o += 1
        state.trace.append((d.id, d_p, 1))

    total_z = sum(state.z[i] for i in q_ids)
    shares = {i: d.volume * state.z[i] / total_z for i in q_ids}
    allocations: dict[int, FlowAllocation] = {}
    link_delta: dict[str, float] = {}
    node_delta: dict[str, float] = {}
    for i in q_ids:
        alloc = _route_share(state, i, d, shares[i])
        if alloc is None:
            return _finish(state, d, False, "capacity", shares, {}, {}, {}, total_z)
        allocations[i] = alloc
        for eid, val in alloc.link_flow.items():
            link_delta[eid] = link_delta.get(eid, 0.0) + val
        for v, val in _alloc_node_usage(alloc, state.g).items():
            node_delta[v] = node_delta.get(v, 0.0) + val
    fits = all(
        val <= state.residual_link[eid] + RATE_TOL * max(1.0, state.g.link_by_id[eid].capacity)
        for eid, val in link_delta.items()
    ) and all(
        val <= state.residual_node[v] + RATE_TOL * max(1.0, state.g.node_capacity[v])
        for v, val in node_delta.items()
    )
    if not fits:
        return _finish(state, d, False, "capacity", shares, {}, {}, {}, total_z)
    for eid, val in link_delta.items():
        state.residual_link[eid] -= val
        state.chi[eid] += val
    for v, val in node_delta.items():
        state.residual_node[v] -= val
    state.accepted_count += 1
    return _finish(state, d, True, "", shares, allocations, link_delta, node_delta, total_z)


def _finish(
    state: OrbitState,
    d: ServiceDemand,
    accepted: bool,
    reason: str,
    shares: dict[int, float],
    allocations: dict[int, FlowAllocation],
    link_delta: dict[str, float],
    node_delta: dict[str, float],
    total_z: float,
) -> AdmissionDecision:
    state.events.append(
        EventRecord(
            demand_id=d.id,
            decision="accepted" if accepted else "rejected",
            reason=reason,
            sum_z=total_z,
            p_o=state.p_o,
            d_o=state.d_o,
            r_current=state.max_utilization(),
            acceptance_ratio=state.acceptance_ratio(),
        )
    )
    return AdmissionDecision(
        demand_id=d.id,
        accepted=accepted,
        reason=reason,
        shares=shares,
        allocations=allocations,
        link_delta=link_delta,
        node_delta=node_delta,
    )


def primal_cost(state: OrbitState) -> float:
    return sum(p.pi * state.z[p.index] for p in state.part.parts)


def dual_cost(state: OrbitState) -> int:
    return sum(state.zeta.values())


@dataclass(frozen=True)
class GuaranteeCheck:
    name: str
    ok: bool
    detail: str


@dataclass
class GuaranteeReport:
    checks: tuple[GuaranteeCheck, ...]
    empirical_dual_scale: float | None

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def render(self) -> str:
        lines = []
        for c in self.checks:
            status = "ok" if c.ok else "VIOLATED"
            lines.append(f"{c.name}: {status} ({c.detail})")
        scale = (
            format_number(self.empirical_dual_scale)
            if self.empirical_dual_scale is not None
            else "undefined"
        )
        lines.append(f"empirical_dual_scale: {scale}")
        return "\n".join(lines) + "\n"


def verify_guarantees(
    state: OrbitState, log_base: float = math.e
) -> GuaranteeReport:
    """Check the run's analytic properties on the current state.

    coverage   - processed demands with eligible groups have fractions
                 summing to at least 1
    dual_load  - per group i, the duals of its demands stay within
                 log(3*kappa+1) * (1 + pi_i*epsilon)
    share_cap  - every fraction z_i stays at or below 3
    cost_gap   - the primal cost stays within twice the dual cost
    step_gap   - each sweep raised the dual by exactly 1 and the primal by
                 at most 2
    growth_floor - z_i >= ((1+1/(pi_i*eps))^{dual load of i} - 1)/kappa

    The reported empirical scale is max_i dual_load_i/(pi_i*eps*ln kappa),
    the measured counterpart of the competitive-ratio scaling (undefined
    for a single group).
    """
    kappa = state.part.kappa
    eps = state.part.epsilon
    checks: list[GuaranteeCheck] = []

    worst: tuple[float, int] | None = None
    cover_ok = True
    detail = "no demands with eligible groups"
    for d_id, q_ids in state.demand_q.items():
        if not q_ids:
            continue
        total = sum(state.z[i] for i in q_ids)
        if worst is None or total < worst[0]:
            worst = (total, d_id)
    if worst is not None:
        cover_ok = worst[0] >= 1.0 - GUARANTEE_TOL
        detail = f"min coverage {worst[0]:.12g} at demand {worst[1]}"
    checks.append(GuaranteeCheck("coverage", cover_ok, detail))

    loads = {
        p.index: sum(state.zeta[d_id] for d_id in state.q[p.index])
        for p in state.part.parts
    }
    dual_ok = True
    details = []
    for p in state.part.parts:
        bound = math.log(3 * kappa + 1, log_base) * (1.0 + p.pi * eps)
        if loads[p.index] > bound + GUARANTEE_TOL:
            dual_ok = False
            details.append(
                f"group {p.index} load {loads[p.index]} exceeds {bound:.12g}"
            )
    if not details:
        details.append(
            "max load "
            + str(max(loads.values(), default=0))
            + f" within bounds for {kappa} groups"
        )
    checks.append(GuaranteeCheck("dual_load", dual_ok, "; ".join(details)))

    z_max = max(state.z, default=0.0)
    z_arg = state.z.index(z_max) if state.z else 0
    checks.append(
        GuaranteeCheck(
            "share_cap",
            z_max <= 3.0 + GUARANTEE_TOL,
            f"max fraction {z_max:.12g} at group {z_arg}",
        )
    )

    p_now = primal_cost(state)
    d_now = dual_cost(state)
    checks.append(
        GuaranteeCheck(
            "cost_gap",
            p_now <= 2.0 * d_now + GUARANTEE_TOL,
            f"primal {p_now:.12g} vs dual {d_now}",
        )
    )

    step_ok = True
    step_detail = f"{len(state.trace)} sweeps"
    for d_id, d_p, d_d in state.trace:
        if d_d != 1 or d_p > 2.0 + GUARANTEE_TOL:
            step_ok = False
            step_detail = f"sweep at demand {d_id}: primal step {d_p:.12g}, dual step {d_d}"
            break
    checks.append(GuaranteeCheck("step_gap", step_ok, step_detail))

    floor_ok = True
    floor_detail = "all groups at or above the growth floor"
    for p in state.part.parts:
        floor = ((1.0 + 1.0 / (p.pi * eps)) ** loads[p.index] - 1.0) / kappa
        if state.z[p.index] < floor - GUARANTEE_TOL:
            floor_ok = False
            floor_detail = (
                f"group {p.index} fraction {state.z[p.index]:.12g} below {floor:.12g}"
            )
            break
    checks.append(GuaranteeCheck("growth_floor", floor_ok, floor_detail))

    scale = None
    if kappa >= 2:
        ratios = [
            loads[p.index] / (p.pi * eps * math.log(kappa))
            for p in state.part.parts
        ]
        scale = max(ratios) if ratios else None
    return GuaranteeReport(checks=tuple(checks), empirical_dual_scale=scale)


def run_stream(
    g: NfviGraph,
    demands,
    partitioning: Partitioning,
    w: dict[str, int] | None = None,
) -> OrbitState:
    """Process a whole arrival sequence and return the final state."""
    state = OrbitState(g, partitioning, w)
    for d in demands:
        process_demand(state, d)
    return state
