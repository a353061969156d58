"""Exhaustive search for the weight vector minimizing max link utilization.

Every integer weight vector in {1..w_max}^|E| is enumerated in lexicographic
order (link declaration order, first link most significant).  A vector is
feasible when every demand routes through its chain and the combined
allocation respects all link bandwidths and node compute capacities.  Ties
on the objective keep the lexicographically smallest vector.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .errors import OracleGuardError
from .model import NfviGraph, ServiceDemand
from .routing import RATE_TOL, StreamResult, format_number, route_all

GUARD_LIMIT = 10**7
LOG_LIMIT = 10000


@dataclass(frozen=True)
class OracleEntry:
    w: tuple[int, ...]
    feasible: bool
    r: float  # nan when some demand cannot be routed at all

    def csv_row(self) -> str:
        wtxt = " ".join(str(x) for x in self.w)
        return f"{wtxt},{int(self.feasible)},{format_number(self.r)}"


@dataclass
class OracleResult:
    best_w: dict[str, int] | None
    best_r: float | None
    combinations: int
    log: tuple[OracleEntry, ...]
    log_truncated: bool
    best_result: StreamResult | None = None

    @property
    def feasible(self) -> bool:
        return self.best_w is not None

    def log_csv(self) -> str:
        lines = ["w_vector,feasible,r"]
        lines.extend(e.csv_row() for e in self.log)
        return "\n".join(lines) + "\n"


def exact_oracle(
    g: NfviGraph,
    demands: list[ServiceDemand],
    w_max: int,
    force: bool = False,
    log_limit: int = LOG_LIMIT,
) -> OracleResult:
    """Minimize r over all weight vectors by direct enumeration.

    Refuses instances above 10^7 combinations unless forced.  The
    feasibility log keeps the first ``log_limit`` entries; the enumeration
    count is always exact.
    """
    link_ids = list(g.link_ids)
    combinations = w_max ** len(link_ids)
    if combinations > GUARD_LIMIT and not force:
        raise OracleGuardError(combinations, GUARD_LIMIT)
    best_w: tuple[int, ...] | None = None
    best_r: float | None = None
    best_result: StreamResult | None = None
    log: list[OracleEntry] = []
    truncated = False
    for combo in itertools.product(range(1, w_max + 1), repeat=len(link_ids)):
        w = dict(zip(link_ids, combo))
        result = route_all(g, w, demands)
        if result is None:
            feasible = False
            r = math.nan
        else:
            r = result.report.r
            feasible = r <= 1.0 + RATE_TOL and not result.report.over_capacity_nodes(g)
        if len(log) < log_limit:
            log.append(OracleEntry(combo, feasible, r))
        else:
            truncated = True
        # strict improvement keeps the lexicographically first optimum
        if feasible and (best_r is None or r < best_r):
            best_w, best_r, best_result = combo, r, result
    return OracleResult(
        best_w=dict(zip(link_ids, best_w)) if best_w is not None else None,
        best_r=best_r,
        combinations=combinations,
        log=tuple(log),
        log_truncated=truncated,
        best_result=best_result,
    )
