"""Symbolic mixed-integer model for offline weight optimization.

The model minimizes the maximum link utilization r over integer link weights
and per-flow traffic variables, tying flows to equal-cost shortest paths.
Constraint families are numbered 1..14:

  1-3   flow balance (relay nodes, source emission, destination absorption)
  4     link bandwidth against r
  5     equal traffic share on shortest-path out-links of a node (two-sided)
  6     zero flow off the destination's shortest-path subgraph
  7     weights versus distance labels defining that subgraph (two-sided)
  8     every weight at least 1
  9-10  flow must touch a capable node per chain position / be nonzero
  11-13 per-flow link-use indicators and path-like propagation
  14    node compute capacity

Strict inequalities in families 9-10 are relaxed to >= DELTA * volume, which
LP text can express; the relaxation is recorded in the export header.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ValidationError
from .model import NfviGraph, ServiceDemand
from .routing import (
    EcmpDag,
    FlowAllocation,
    ShortestPathField,
    ecmp_dag,
    format_number,
    max_link_utilization,
    shortest_path_field,
)
from .errors import RoutingError

DELTA = 1e-4
CHECK_TOL = 1e-9


@dataclass(frozen=True)
class Row:
    name: str
    family: str
    terms: tuple[tuple[float, str], ...]
    sense: str  # "<=", ">=", "="
    rhs: float
    side: str = ""  # "lo"/"hi" halves of a two-sided constraint, else ""


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str  # "continuous", "integer", "binary"
    lb: float = 0.0


@dataclass
class MilpModel:
    variables: dict[str, Variable]
    rows: list[Row]
    objective: str
    m_z: float
    delta: float
    flows_per_demand: int
    targets: tuple[str, ...]
    demand_ids: tuple[int, ...]

    def family_counts(self) -> dict[str, int]:
        """Constraints per family; the two halves of a two-sided constraint
        count once."""
        counts: dict[str, int] = {}
        for row in self.rows:
            if row.side == "hi":
                continue
            counts[row.family] = counts.get(row.family, 0) + 1
        return counts

    def rows_in(self, families: tuple[str, ...]) -> list[Row]:
        want = set(families)
        return [r for r in self.rows if r.family in want]


class _RowBuilder:
    def __init__(self) -> None:
        self.coef: dict[str, float] = {}

    def add(self, c: float, var: str) -> None:
        if c == 0:
            return
        self.coef[var] = self.coef.get(var, 0.0) + c

    def terms(self) -> tuple[tuple[float, str], ...]:
        return tuple((c, v) for v, c in self.coef.items() if c != 0)


def _wvar(eid: str) -> str:
    return f"w_{eid}"


def _lvar(v: str, t: str) -> str:
    return f"l_{v}_{t}"


def _uvar(eid: str, t: str) -> str:
    return f"u_{eid}_{t}"


def _gvar(v: str, t: str) -> str:
    return f"g_{v}_{t}"


def _xvar(eid: str, p: int, d: int) -> str:
    return f"x_{eid}_{p}_{d}"


def _bvar(eid: str, p: int, d: int) -> str:
    return f"b_{eid}_{p}_{d}"


def build_model(
    g: NfviGraph, demands: list[ServiceDemand], flows_per_demand: int = 2
) -> MilpModel:
    """Assemble every constraint family for the given instance.

    The big-M constant is the maximum link capacity.  Distance labels toward
    a target t exist for nodes v != t; occurrences of the target's own label
    are the constant 0.  Targets are the distinct demand destinations.
    """
    if flows_per_demand < 1:
        raise ValidationError([f"flows per demand must be >= 1, got {flows_per_demand}"])
    m_z = g.max_link_capacity()
    targets = tuple(sorted({d.dst for d in demands}))
    flows = range(flows_per_demand)

    variables: dict[str, Variable] = {"r": Variable("r", "continuous")}
    for e in g.links:
        variables[_wvar(e.id)] = Variable(_wvar(e.id), "integer", lb=1.0)
    for t in targets:
        for v in g.node_capacity:
            if v != t:
                variables[_lvar(v, t)] = Variable(_lvar(v, t), "integer")
        for e in g.links:
            variables[_uvar(e.id, t)] = Variable(_uvar(e.id, t), "binary")
        for v in g.node_capacity:
            variables[_gvar(v, t)] = Variable(_gvar(v, t), "continuous")
    for d in demands:
        for p in flows:
            for e in g.links:
                variables[_xvar(e.id, p, d.id)] = Variable(_xvar(e.id, p, d.id), "continuous")
                variables[_bvar(e.id, p, d.id)] = Variable(_bvar(e.id, p, d.id), "binary")
    expected = (
        1
        + len(g.links)
        + len(targets) * (len(g.node_capacity) - 1)
        + len(targets) * len(g.links)
        + len(targets) * len(g.node_capacity)
        + 2 * len(demands) * flows_per_demand * len(g.links)
    )
    if len(variables) != expected:
        raise ValidationError(["generated variable names collide; use distinct ids"])

    rows: list[Row] = []

    def l_term(b: _RowBuilder, c: float, v: str, t: str) -> None:
        # the target's own distance label is the constant zero
        if v != t:
            b.add(c, _lvar(v, t))

    for d in demands:
        for v in g.node_capacity:
            if v in (d.src, d.dst):
                continue
            b = _RowBuilder()
            for p in flows:
                for e in g.out_links.get(v, ()):
                    b.add(1.0, _xvar(e.id, p, d.id))
                for e in g.in_links.get(v, ()):
                    b.add(-1.0, _xvar(e.id, p, d.id))
            rows.append(Row(f"c1_{d.id}_{v}", "1", b.terms(), "=", 0.0))
    for d in demands:
        b = _RowBuilder()
        for p in flows:
            for e in g.out_links.get(d.src, ()):
                b.add(1.0, _xvar(e.id, p, d.id))
        rows.append(Row(f"c2_{d.id}", "2", b.terms(), "=", d.volume))
    for d in demands:
        b = _RowBuilder()
        for p in flows:
            for e in g.in_links.get(d.dst, ()):
                b.add(1.0, _xvar(e.id, p, d.id))
        rows.append(Row(f"c3_{d.id}", "3", b.terms(), "=", d.volume))

    for e in g.links:
        b = _RowBuilder()
        for d in demands:
            for p in flows:
                b.add(1.0, _xvar(e.id, p, d.id))
        b.add(-e.capacity, "r")
        rows.append(Row(f"c4_{e.id}", "4", b.terms(), "<=", 0.0))

    for t in targets:
        h_total = sum(d.volume for d in demands if d.dst == t)
        for e in g.links:
            lo = _RowBuilder()
            lo.add(1.0, _gvar(e.src, t))
            for d in demands:
                if d.dst != t:
                    continue
                for p in flows:
                    lo.add(-1.0, _xvar(e.id, p, d.id))
            rows.append(Row(f"c5_{e.id}_{t}_lo", "5", lo.terms(), ">=", 0.0, side="lo"))
            hi = _RowBuilder()
            hi.coef = dict(lo.coef)
            hi.add(h_total, _uvar(e.id, t))
            rows.append(Row(f"c5_{e.id}_{t}_hi", "5", hi.terms(), "<=", h_total, side="hi"))

    for d in demands:
        for e in g.links:
            b = _RowBuilder()
            for p in flows:
                b.add(1.0, _xvar(e.id, p, d.id))
            b.add(-d.volume, _uvar(e.id, d.dst))
            rows.append(Row(f"c6_{d.id}_{e.id}", "6", b.terms(), "<=", 0.0))

    for d in demands:
        t = d.dst
        for e in g.links:
            lo = _RowBuilder()
            l_term(lo, 1.0, e.dst, t)
            lo.add(1.0, _wvar(e.id))
            l_term(lo, -1.0, e.src, t)
            lo.add(1.0, _uvar(e.id, t))
            rows.append(Row(f"c7_{d.id}_{e.id}_lo", "7", lo.terms(), ">=", 1.0, side="lo"))
            hi = _RowBuilder()
            l_term(hi, 1.0, e.dst, t)
            hi.add(1.0, _wvar(e.id))
            l_term(hi, -1.0, e.src, t)
            hi.add(m_z, _uvar(e.id, t))
            rows.append(Row(f"c7_{d.id}_{e.id}_hi", "7", hi.terms(), "<=", m_z, side="hi"))

    for e in g.links:
        b = _RowBuilder()
        b.add(1.0, _wvar(e.id))
        rows.append(Row(f"c8_{e.id}", "8", b.terms(), ">=", 1.0))

    for d in demands:
        if d.volume <= 0:
            continue
        for i, fn in enumerate(d.chain):
            for p in flows:
                b = _RowBuilder()
                for e in g.links:
                    k = int(g.can_host(e.src, fn)) + int(g.can_host(e.dst, fn))
                    if k:
                        b.add(float(k), _xvar(e.id, p, d.id))
                rows.append(Row(f"c9_{d.id}_{i}_{p}", "9", b.terms(), ">=", DELTA * d.volume))
    for d in demands:
        if d.volume <= 0:
            continue
        for p in flows:
            b = _RowBuilder()
            for e in g.links:
                b.add(1.0, _xvar(e.id, p, d.id))
            rows.append(Row(f"c10_{d.id}_{p}", "10", b.terms(), ">=", DELTA * d.volume))

    for d in demands:
        for p in flows:
            for e in g.links:
                b = _RowBuilder()
                b.add(1.0, _xvar(e.id, p, d.id))
                b.add(-m_z, _bvar(e.id, p, d.id))
                rows.append(Row(f"c11_{d.id}_{p}_{e.id}", "11", b.terms(), "<=", 0.0))
    for d in demands:
        for p in flows:
            for e in g.links:
                b = _RowBuilder()
                b.add(1.0, _xvar(e.id, p, d.id))
                for e2 in g.in_links.get(e.src, ()):
                    b.add(-1.0, _xvar(e2.id, p, d.id))
                b.add(-m_z, _bvar(e.id, p, d.id))
                rows.append(Row(f"c12_{d.id}_{p}_{e.id}", "12", b.terms(), ">=", -m_z))
    for d in demands:
        for p in flows:
            for e in g.links:
                b = _RowBuilder()
                b.add(1.0, _xvar(e.id, p, d.id))
                for e2 in g.in_links.get(e.src, ()):
                    b.add(-1.0, _xvar(e2.id, p, d.id))
                rows.append(Row(f"c13_{d.id}_{p}_{e.id}", "13", b.terms(), "<=", 0.0))

    for v in g.node_capacity:
        b = _RowBuilder()
        for d in demands:
            per_rate = sum(g.cost(v, fn) for fn in d.chain if g.can_host(v, fn))
            if per_rate == 0:
                continue
            for p in flows:
                for e in g.in_links.get(v, ()):
                    b.add(per_rate, _xvar(e.id, p, d.id))
        rows.append(Row(f"c14_{v}", "14", b.terms(), "<=", g.node_capacity[v]))

    return MilpModel(
        variables=variables,
        rows=rows,
        objective="r",
        m_z=m_z,
        delta=DELTA,
        flows_per_demand=flows_per_demand,
        targets=targets,
        demand_ids=tuple(d.id for d in demands),
    )


def _format_terms(terms: tuple[tuple[float, str], ...]) -> str:
    parts = []
    for c, v in terms:
        sign = "+" if c >= 0 else "-"
        mag = abs(c)
        if mag == 1.0:
            parts.append(f"{sign} {v}")
        else:
            parts.append(f"{sign} {format_number(mag)} {v}")
    return " ".join(parts)


def export_lp(model: MilpModel, path: str | None = None) -> str:
    """Render the model in LP text syntax; rows without terms are omitted
    (they carry no variables and LP rows cannot be empty)."""
    lines = [
        f"\\ delta = {format_number(model.delta)} "
        "(relaxation of strict traversal inequalities)",
        f"\\ M_z = {format_number(model.m_z)}",
        "Minimize",
        f" obj: + {model.objective}",
        "Subject To",
    ]
    for row in model.rows:
        if not row.terms:
            continue
        lines.append(
            f" {row.name}: {_format_terms(row.terms)} {row.sense} {format_number(row.rhs)}"
        )
    bounds = [v for v in model.variables.values() if v.lb != 0.0]
    if bounds:
        lines.append("Bounds")
        for v in bounds:
            lines.append(f" {v.name} >= {format_number(v.lb)}")
    generals = [v.name for v in model.variables.values() if v.kind == "integer"]
    if generals:
        lines.append("Generals")
        for name in generals:
            lines.append(f" {name}")
    binaries = [v.name for v in model.variables.values() if v.kind == "binary"]
    if binaries:
        lines.append("Binaries")
        for name in binaries:
            lines.append(f" {name}")
    lines.append("End")
    text = "\n".join(lines) + "\n"
    if path is not None:
        from .fileio import write_text

        write_text(path, text)
    return text


def parse_lp(text: str) -> MilpModel:
    """Re-read LP text produced by export_lp into an equivalent model.

    Handles the exporter's dialect: one row per line, explicit term signs,
    single-variable objective.  Exporting the parsed model reproduces the
    input byte for byte.
    """
    delta = DELTA
    m_z = 0.0
    section = ""
    rows: list[Row] = []
    objective = "r"
    bounds: dict[str, float] = {}
    generals: list[str] = []
    binaries: list[str] = []
    seen_vars: dict[str, None] = {}
    for raw_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("\\"):
            body = line[1:].strip()
            if body.startswith("delta ="):
                delta = float(body.split("=", 1)[1].split("(", 1)[0].strip())
            elif body.startswith("M_z ="):
                m_z = float(body.split("=", 1)[1].strip())
            continue
        lowered = line.lower()
        if lowered in ("minimize", "subject to", "bounds", "generals", "binaries", "end"):
            section = lowered
            continue
        if section == "minimize":
            _, rest = line.split(":", 1)
            objective = rest.replace("+", "").strip()
            seen_vars.setdefault(objective)
        elif section == "subject to":
            name, rest = line.split(":", 1)
            name = name.strip()
            tokens = rest.split()
            terms: list[tuple[float, str]] = []
            i = 0
            sense = "="
            rhs = 0.0
            while i < len(tokens):
                tok = tokens[i]
                if tok in ("<=", ">=", "="):
                    sense = tok
                    rhs = float(tokens[i + 1])
                    break
                sign = 1.0 if tok == "+" else -1.0
                nxt = tokens[i + 1]
                try:
                    coef = float(nxt)
                    var = tokens[i + 2]
                    i += 3
                except ValueError:
                    coef = 1.0
                    var = nxt
                    i += 2
                terms.append((sign * coef, var))
                seen_vars.setdefault(var)
            family = name.split("_", 1)[0].lstrip("c")
            side = ""
            # only families 5 and 7 are emitted in two halves
            if family in ("5", "7"):
                side = "lo" if name.endswith("_lo") else "hi"
            rows.append(Row(name, family, tuple(terms), sense, rhs, side=side))
        elif section == "bounds":
            var, _, num = line.split()
            bounds[var] = float(num)
            seen_vars.setdefault(var)
        elif section == "generals":
            generals.append(line)
            seen_vars.setdefault(line)
        elif section == "binaries":
            binaries.append(line)
            seen_vars.setdefault(line)
    # rebuild the variable table in an order that re-exports the Bounds,
    # Generals and Binaries sections byte-identically: objective first, then
    # the section lists in file order, then remaining row variables
    variables: dict[str, Variable] = {}
    gen = set(generals)
    binr = set(binaries)

    def _kind(name: str) -> str:
        return "integer" if name in gen else "binary" if name in binr else "continuous"

    for name in [objective, *generals, *binaries, *seen_vars]:
        if name not in variables:
            variables[name] = Variable(name, _kind(name), lb=bounds.get(name, 0.0))
    return MilpModel(
        variables=variables,
        rows=rows,
        objective=objective,
        m_z=m_z,
        delta=delta,
        flows_per_demand=0,
        targets=(),
        demand_ids=(),
    )


@dataclass(frozen=True)
class SolutionCandidate:
    """A value for every model variable."""

    values: dict[str, float]

    def __getitem__(self, name: str) -> float:
        return self.values[name]


@dataclass(frozen=True)
class Violation:
    row: str
    family: str
    residual: float


@dataclass
class FeasibilityReport:
    violations: tuple[Violation, ...]
    objective: float

    @property
    def feasible(self) -> bool:
        return not self.violations

    def by_family(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for v in self.violations:
            counts[v.family] = counts.get(v.family, 0) + 1
        return counts

    def count_in(self, families: tuple[str, ...]) -> int:
        want = set(families)
        return sum(1 for v in self.violations if v.family in want)


def check_solution(model: MilpModel, cand: SolutionCandidate) -> FeasibilityReport:
    """Evaluate every constraint row and variable domain against a candidate.

    Violations carry the constraint family and the residual by which the row
    fails; relative tolerance 1e-9 on the larger of 1, |lhs|, |rhs|.
    """
    missing = [name for name in model.variables if name not in cand.values]
    if missing:
        raise ValidationError([f"candidate is missing variable {n}" for n in missing[:20]])
    violations: list[Violation] = []
    for var in model.variables.values():
        val = cand.values[var.name]
        if var.kind in ("integer", "binary") and abs(val - round(val)) > CHECK_TOL:
            violations.append(Violation(var.name, "domain", abs(val - round(val))))
        if var.kind == "binary" and not (-CHECK_TOL <= val <= 1 + CHECK_TOL):
            violations.append(Violation(var.name, "domain", abs(val - 0.5) - 0.5))
        if val < var.lb - CHECK_TOL:
            violations.append(Violation(var.name, "domain", var.lb - val))
    for row in model.rows:
        lhs = sum(c * cand.values[v] for c, v in row.terms)
        tol = CHECK_TOL * max(1.0, abs(lhs), abs(row.rhs))
        residual = 0.0
        if row.sense == "=":
            residual = abs(lhs - row.rhs)
        elif row.sense == "<=":
            residual = lhs - row.rhs
        else:
            residual = row.rhs - lhs
        if residual > tol:
            violations.append(Violation(row.name, row.family, residual))
    return FeasibilityReport(
        violations=tuple(violations), objective=cand.values.get("r", 0.0)
    )


def candidate_from_routing(
    model: MilpModel,
    g: NfviGraph,
    w: dict[str, int],
    demands: list[ServiceDemand],
    allocations: dict[int, FlowAllocation] | tuple[FlowAllocation, ...] | list[FlowAllocation],
    field: ShortestPathField | None = None,
    dag: EcmpDag | None = None,
) -> SolutionCandidate:
    """Lift routed allocations into a full variable assignment.

    Per-flow traffic divides each demand's link flow evenly across its flow
    copies.  Requires every distance label the model uses to be finite.
    """
    if not isinstance(allocations, dict):
        allocations = {a.demand_id: a for a in allocations}
    if field is None:
        field = shortest_path_field(g, w)
    if dag is None:
        dag = ecmp_dag(g, w, field)
    values: dict[str, float] = {}
    for e in g.links:
        values[_wvar(e.id)] = float(w[e.id])
    for t in model.targets:
        for v in g.node_capacity:
            if v == t:
                continue
            dist = field.dist(v, t)
            if dist == float("inf"):
                raise RoutingError(
                    f"distance from {v} to {t} is infinite; candidate needs all "
                    "destinations reachable"
                )
            values[_lvar(v, t)] = float(dist)
        for e in g.links:
            values[_uvar(e.id, t)] = 1.0 if dag.on_shortest(e, t) else 0.0
        for v in g.node_capacity:
            values[_gvar(v, t)] = 0.0
    for (v, t), share in _aggregate_shares(allocations).items():
        if t in model.targets:
            values[_gvar(v, t)] = share
    flows = model.flows_per_demand
    for d in demands:
        alloc = allocations.get(d.id)
        for e in g.links:
            per_flow = 0.0
            if alloc is not None:
                per_flow = alloc.link_flow.get(e.id, 0.0) / flows
            for p in range(flows):
                values[_xvar(e.id, p, d.id)] = per_flow
                values[_bvar(e.id, p, d.id)] = 1.0 if per_flow > 0 else 0.0
    values["r"] = max_link_utilization(list(allocations.values()), g).r
    return SolutionCandidate(values)


def _aggregate_shares(allocations: dict[int, FlowAllocation]) -> dict[tuple[str, str], float]:
    total: dict[tuple[str, str], float] = {}
    for alloc in allocations.values():
        for key, share in alloc.node_share.items():
            total[key] = total.get(key, 0.0) + share
    return total
