"""Synthetic grid scenarios with Poisson demand.

The network is a ``rows x cols`` lattice of two-way streets. Demand is a
Poisson process per (zone, interval) whose mean counts are exactly the rates
written to the rates file, so the rates double as an unbiased history.
"""

import dataclasses
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .demand import RateTable, Request, write_rates_csv, write_requests_csv
from .network import all_pairs_shortest, build_grid_zones, load_network, write_network_csv

PATTERNS = ("uniform", "hotspot", "commute")


@dataclass
class SyntheticSpec:
    pattern: str = "uniform"
    rows: int = 10
    cols: int = 10
    spacing: float = 400.0  # meters between adjacent intersections
    speed: float = 8.0  # m/s
    cell_size: float = 1200.0
    rate: float = 0.1  # requests per second over the whole network
    duration: float = 3 * 3600.0
    interval_length: float = 900.0
    profile: list = None  # per-interval rate multipliers, last value repeats
    zone_weights: dict = None  # hotspot: zone id -> origin weight
    origin_zones: list = None  # commute
    dest_zones: list = None  # commute
    min_trip_s: float = 0.0
    seed: int = 0

    def validate(self):
        if self.pattern not in PATTERNS:
            raise ValueError(f"pattern must be one of {PATTERNS}")
        if self.rows < 1 or self.cols < 1 or self.rows * self.cols < 2:
            raise ValueError("grid needs at least two nodes")
        if self.spacing <= 0 or self.speed <= 0 or self.cell_size <= 0:
            raise ValueError("spacing, speed and cell_size must be positive")
        if self.rate < 0 or self.duration < 0:
            raise ValueError("rate and duration must be non-negative")
        if self.pattern == "hotspot" and not self.zone_weights:
            raise ValueError("hotspot pattern needs zone_weights")
        if self.pattern == "commute" and not (self.origin_zones and self.dest_zones):
            raise ValueError("commute pattern needs origin_zones and dest_zones")
        return self

    def to_dict(self):
        return dataclasses.asdict(self)


@dataclass
class Scenario:
    spec: SyntheticSpec
    net: object
    tables: object
    zones: object
    rates: RateTable
    requests: list = field(default_factory=list)


def grid_network(rows, cols, spacing, speed):
    nodes = [{"node_id": r * cols + c, "x": c * spacing, "y": r * spacing}
             for r in range(rows) for c in range(cols)]
    edges = []
    t = float(max(1, round(spacing / speed)))  # whole seconds
    for r in range(rows):
        for c in range(cols):
            a = r * cols + c
            for dr, dc in ((0, 1), (1, 0)):
                rr, cc = r + dr, c + dc
                if rr < rows and cc < cols:
                    b = rr * cols + cc
                    edges.append({"from": a, "to": b, "length_m": spacing, "time_s": t})
                    edges.append({"from": b, "to": a, "length_m": spacing, "time_s": t})
    return load_network(nodes, edges)


def origin_weights(spec, zones):
    ids = zones.zone_ids
    if spec.pattern == "uniform":
        w = np.ones(len(ids))
    elif spec.pattern == "hotspot":
        w = np.array([float(spec.zone_weights.get(z, spec.zone_weights.get(str(z), 0.0))) for z in ids])
    else:
        w = np.array([1.0 if z in spec.origin_zones else 0.0 for z in ids])
    if w.sum() <= 0:
        raise ValueError("origin weights sum to zero")
    return w / w.sum()


def _multiplier(profile, k):
    if not profile:
        return 1.0
    return float(profile[min(k, len(profile) - 1)])


def generate_synthetic(spec):
    """Build the network, zones, rates and a Poisson request stream."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    net = grid_network(spec.rows, spec.cols, spec.spacing, spec.speed)
    tables = all_pairs_shortest(net)
    zones = build_grid_zones(net, spec.cell_size)
    w = origin_weights(spec, zones)
    L = spec.interval_length
    n_intervals = math.ceil(spec.duration / L) if spec.duration > 0 else 0

    rates = {}
    for k in range(n_intervals):
        for z, wz in zip(zones.zone_ids, w):
            rates[(z, k)] = spec.rate * L * wz * _multiplier(spec.profile, k)
    rate_table = RateTable(rates, float(L))

    if spec.pattern == "commute":
        dest_pool = [n for n in range(net.n_nodes) if zones.zone_of(n) in spec.dest_zones]
    else:
        dest_pool = list(range(net.n_nodes))
    dest_pool = np.array(dest_pool)

    requests = []
    for k in range(n_intervals):
        lo = k * L
        hi = min((k + 1) * L, spec.duration)
        for pos, z in enumerate(zones.zone_ids):
            lam = rates[(z, k)] * (hi - lo) / L
            n = int(rng.poisson(lam)) if lam > 0 else 0
            times = np.sort(rng.uniform(lo, hi, size=n))
            members = zones.members[pos]
            for t in times:
                o = members[int(rng.integers(len(members)))]
                for _ in range(1000):
                    d = int(dest_pool[int(rng.integers(len(dest_pool)))])
                    if d != o and tables.time[o, d] >= spec.min_trip_s:
                        break
                else:
                    raise ValueError(f"no destination at least {spec.min_trip_s}s from node {o}")
                requests.append((float(t), o, d))
    requests.sort()
    # arrivals in whole seconds keep the journal free of float noise
    out = [Request(i, o, d, float(math.floor(t)), float(tables.time[o, d])) for i, (t, o, d) in enumerate(requests)]
    return Scenario(spec, net, tables, zones, rate_table, out)


def write_scenario(scenario, out_dir):
    """Write nodes/edges/requests/rates CSVs and a scenario config; returns the config path."""
    os.makedirs(out_dir, exist_ok=True)
    header = ["generator " + json.dumps(scenario.spec.to_dict(), sort_keys=True)]
    paths = {k: os.path.join(out_dir, f"{k}.csv") for k in ("nodes", "edges", "requests", "rates")}
    write_network_csv(scenario.net, paths["nodes"], paths["edges"], header)
    write_requests_csv(scenario.requests, scenario.net, paths["requests"], header)
    write_rates_csv(scenario.rates, paths["rates"], header)
    config = {
        "generator": scenario.spec.to_dict(),
        "network": {"nodes": "nodes.csv", "edges": "edges.csv"},
        "requests": "requests.csv",
        "rates": "rates.csv",
        "interval_length": scenario.spec.interval_length,
        "zones": {"grid": scenario.spec.cell_size},
        "sim": {"start_time": 0.0, "warmup": 3600.0, "measurement": 3600.0, "cooloff": 3600.0},
    }
    path = os.path.join(out_dir, "scenario.json")
    with open(path, "w") as fh:
        json.dump(config, fh, indent=2, sort_keys=True)
    return path
