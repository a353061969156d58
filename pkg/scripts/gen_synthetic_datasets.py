"""Regenerate the bundled synthetic datasets.

Writes two topology/demand pairs into src/orbitlb/datasets: a 12-node
continental backbone (30 directed links) with 130 demands and a 22-node
European backbone (72 directed links) with 250 demands.  Link capacities,
function placement, compute budgets, and demand mixes are all drawn from a
fixed-seed generator, so the files are reproducible byte for byte.
"""

from __future__ import annotations

import os
import random
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from orbitlb import load_demands, load_topology, serialize_demands, serialize_topology
from orbitlb.model import DemandStream, Link, NfviGraph, ServiceDemand

DATASET_DIR = os.path.join(os.path.dirname(__file__), "..", "src", "orbitlb", "datasets")
FUNCTIONS = ("nat", "fw", "dpi", "lb")


def build_topology(
    name: str,
    nodes: list[str],
    extra_pairs: int,
    capacity_tiers: list[float],
    seed: int,
) -> NfviGraph:
    rng = random.Random(f"{name}|{seed}")
    n = len(nodes)
    pairs = [(nodes[i], nodes[(i + 1) % n]) for i in range(n)]
    chord_pool = [
        (nodes[i], nodes[j])
        for i in range(n)
        for j in range(i + 2, n)
        if not (i == 0 and j == n - 1)
    ]
    pairs += rng.sample(chord_pool, extra_pairs)

    links = []
    for u, v in pairs:
        cap = rng.choice(capacity_tiers)
        links.append(Link(f"{u}_{v}", u, v, cap))
        links.append(Link(f"{v}_{u}", v, u, cap))

    compute = {v: float(rng.randrange(50, 210, 10)) for v in nodes}
    hosts_per_fn = max(3, n // 2)
    capability = {}
    for fn in FUNCTIONS:
        for v in rng.sample(nodes, hosts_per_fn):
            capability[(v, fn)] = True
    vnf_cost = {pair: rng.choice([0.5, 1.0, 2.0]) for pair in sorted(capability)}
    return NfviGraph(compute, tuple(links), frozenset(FUNCTIONS), capability, vnf_cost)


def build_demands(g: NfviGraph, count: int, seed: int) -> DemandStream:
    rng = random.Random(f"demands|{seed}")
    nodes = sorted(g.nodes)
    demands = []
    for i in range(count):
        src, dst = rng.sample(nodes, 2)
        volume = float(rng.randint(1, 5))
        length = rng.choices([0, 1, 2, 3], weights=[25, 30, 30, 15])[0]
        chain = tuple(rng.sample(FUNCTIONS, length))
        demands.append(ServiceDemand(i, src, dst, volume, chain))
    return DemandStream(tuple(demands))


def write_dataset(name: str, g: NfviGraph, demands: DemandStream) -> None:
    topo_path = os.path.join(DATASET_DIR, f"{name}.topo")
    dem_path = os.path.join(DATASET_DIR, f"{name}.demands")
    header = f"# synthetic {name} dataset, regenerate with scripts/gen_synthetic_datasets.py\n"
    os.makedirs(DATASET_DIR, exist_ok=True)
    with open(topo_path, "w", newline="\n") as fh:
        fh.write(header)
        fh.write(serialize_topology(g))
    with open(dem_path, "w", newline="\n") as fh:
        fh.write(header)
        fh.write(serialize_demands(demands))
    reloaded = load_topology(topo_path)
    stream = load_demands(dem_path, reloaded)
    print(
        f"{name}: {len(reloaded.nodes)} nodes, {len(reloaded.links)} links, "
        f"{len(stream)} demands"
    )


def main() -> None:
    internet2_nodes = [
        "SEAT", "LOSA", "SALT", "DENV", "KANS", "HOUS",
        "CHIC", "ATLA", "WASH", "NEWY", "CLEV", "INDI",
    ]
    geant_nodes = [
        "AMS", "ATH", "BRA", "BRU", "BUD", "CPH", "DUB", "FRA",
        "GEN", "HAM", "LIS", "LJU", "LON", "LUX", "MAD", "MIL",
        "PAR", "PRA", "RIG", "SOF", "VIE", "WAR",
    ]
    g1 = build_topology("internet2", internet2_nodes, 3, [15.0, 25.0, 40.0], seed=7)
    g2 = build_topology("geant", geant_nodes, 14, [10.0, 20.0, 40.0], seed=7)
    write_dataset("internet2", g1, build_demands(g1, 130, seed=7))
    write_dataset("geant", g2, build_demands(g2, 250, seed=7))


if __name__ == "__main__":
    main()
