"""Demand-proportional probabilistic rebalancing of idle vehicles.

Used by the sequential variants after ride-matching. Zone deficits
``D_z = max(phi_z - supply_z, 0)`` define a sampling law ``D_z / sum(D)``.
``ceil(sum(D) / O)`` targets are drawn (never more than there are eligible
idle vehicles) and then paired with vehicles nearest-first. A vehicle sitting
in a zone that is itself in deficit is not eligible to leave.
"""

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Directive:
    vehicle_id: int
    zone_id: object
    target_node: int
    path: tuple
    expected_arrival: float


@dataclass
class RebalancePlan:
    directives: list

    def __len__(self):
        return len(self.directives)

    def targets(self):
        return {d.vehicle_id: d.zone_id for d in self.directives}


def zone_deficits(phi, supply):
    return np.maximum(np.asarray(phi, float) - np.asarray(supply, float), 0.0)


def sample_targets(deficits, n, rng):
    """Draw ``n`` zone positions independently with probability proportional to deficit."""
    d = np.asarray(deficits, float)
    total = d.sum()
    if n <= 0 or total <= 0:
        return np.zeros(0, dtype=np.int64)
    return rng.choice(len(d), size=n, p=d / total)


def probabilistic_rebalance(idle, phi, current_supply, zones, tables, now, capacity, rng, path_fn=None):
    """Rebalancing directives for ``idle`` vehicles.

    ``phi`` and ``current_supply`` are per-zone arrays aligned with
    ``zones.zones``; ``rng`` is a ``numpy.random.Generator`` (or a seed).
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    idle = sorted(idle, key=lambda v: v.id)
    deficits = zone_deficits(phi, current_supply)
    total = float(deficits.sum())
    if total <= 0 or not idle:
        return RebalancePlan([])
    eligible = [v for v in idle if deficits[zones.node_zone_list[v.node]] <= 0]
    if not eligible:
        return RebalancePlan([])
    n = min(len(eligible), math.ceil(total / capacity - 1e-12))
    targets = sample_targets(deficits, n, rng).tolist()

    T = tables.time
    D = tables.distance
    centroids = [zones.zones[z].centroid_node for z in targets]
    pairs = sorted(
        (D[v.node, c], v.id, j, vi)
        for vi, v in enumerate(eligible)
        for j, c in enumerate(centroids)
    )
    used_v, used_t = set(), set()
    directives = []
    for _, vid, j, vi in pairs:
        if vi in used_v or j in used_t:
            continue
        used_v.add(vi)
        used_t.add(j)
        v = eligible[vi]
        c = centroids[j]
        path = tuple(path_fn(v.node, c)) if path_fn is not None else ()
        start = max(now, v.ready_time)
        directives.append(Directive(vid, zones.zones[targets[j]].zone_id, c, path, start + T[v.node, c]))
        if len(used_t) == len(targets):
            break
    directives.sort(key=lambda d: d.vehicle_id)
    return RebalancePlan(directives)
