"""Edge costs for the vehicle/trip/zone assignment.

A route's supply contribution to a zone is the seat-time it makes available
there over the horizon ``[t, t + H]``, divided by ``H``. Travel time along an
edge counts towards the zone of the edge's head node; after the last stop the
vehicle is assumed to wait at that stop until the horizon ends.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ParamViolation
from .routing import DROPOFF, PICKUP, Stop

REBALANCE = "rebalance"


@dataclass(frozen=True)
class SupplyVector:
    zone_ids: tuple
    y: np.ndarray

    def as_dict(self):
        return dict(zip(self.zone_ids, self.y.tolist()))

    def __getitem__(self, zone_id):
        return float(self.y[self.zone_ids.index(zone_id)])


class SupplyCalculator:
    """Supply-contribution vectors with cached per-path zone profiles."""

    def __init__(self, zones, tables, horizon, capacity):
        if horizon <= 0:
            raise ParamViolation("horizon must be positive")
        self.zones = zones
        self.tables = tables
        self.horizon = float(horizon)
        self.capacity = int(capacity)
        self._zone = zones.node_zone_list
        self._T = tables.time_rows
        self._profiles = {}

    def profile(self, i, j):
        """``[(zone position, seconds), ...]`` along the time-optimal path i -> j."""
        key = (i, j)
        prof = self._profiles.get(key)
        if prof is None:
            prof = []
            if i != j:
                Ti = self._T[i]
                prow = self.tables.predecessor[i]
                path = [j]
                node = j
                while node != i:
                    node = int(prow[node])
                    path.append(node)
                path.reverse()
                prev_t = 0.0
                for node in path[1:]:
                    z = self._zone[node]
                    dt = Ti[node] - prev_t
                    prev_t = Ti[node]
                    if prof and prof[-1][0] == z:
                        prof[-1] = (z, prof[-1][1] + dt)
                    else:
                        prof.append((z, dt))
            prof = tuple(prof)
            self._profiles[key] = prof
        return prof

    def seat_time(self, t, start_node, start_time, stops, occupancy=0, tail=True):
        """Raw ``sum_o o * t_o^z`` per zone position (seconds x seats), truncated at ``t + H``."""
        H = self.horizon
        end = t + H
        acc = [0.0] * len(self.zones)
        o = self.capacity - occupancy
        zone = self._zone

        def add(z, a, b):
            if a < t:
                a = t
            if b > end:
                b = end
            if b > a:
                acc[z] += o * (b - a)

        clock = t
        cur = start_node
        if start_time > clock:
            add(zone[cur], clock, start_time)
            clock = start_time
        for st in stops:
            if clock >= end:
                break
            for z, dt in self.profile(cur, st.node):
                add(z, clock, clock + dt)
                clock += dt
            cur = st.node
            if st.planned_time is not None and st.planned_time > clock:
                add(zone[cur], clock, st.planned_time)
                clock = st.planned_time
            if st.kind == PICKUP:
                o -= 1
            elif st.kind == DROPOFF:
                o += 1
        if tail and clock < end:
            add(zone[cur], clock, end)
        return acc

    def route(self, t, start_node, start_time, stops, occupancy=0, tail=True):
        acc = self.seat_time(t, start_node, start_time, stops, occupancy, tail)
        return np.array(acc) / self.horizon

    def stay(self, node):
        y = np.zeros(len(self.zones))
        y[self._zone[node]] = self.capacity
        return y

    def rebalance(self, t, node, ready_time, target):
        stop = Stop(target, REBALANCE, None, None, 0)
        return self.route(t, node, ready_time, [stop])


def supply_contribution(route, start_time, zones, tables, horizon, capacity, occupancy=0, tail=True):
    """Supply vector of ``route`` over ``[start_time, start_time + horizon]``.

    ``route`` is a ``Schedule`` (or any object with ``start_node``,
    ``start_time`` and ``stops``); a rebalancing trip is a single stop of
    kind ``"rebalance"`` at the target centroid.
    """
    calc = SupplyCalculator(zones, tables, horizon, capacity)
    y = calc.route(start_time, route.start_node, route.start_time, route.stops, occupancy, tail)
    return SupplyVector(tuple(zones.zone_ids), y)


@dataclass
class CostParams:
    alpha: object = 1.0  # scalar, or mapping zone_id -> weight
    beta: float = None  # None: sum(alpha) + 1000
    gamma: float = 1.0
    horizon: float = 600.0

    def alpha_vector(self, zone_ids):
        if isinstance(self.alpha, dict):
            return np.array([float(self.alpha.get(z, 1.0)) for z in zone_ids])
        return np.full(len(zone_ids), float(self.alpha))

    def beta_value(self, zone_ids):
        if self.beta is None:
            return float(self.alpha_vector(zone_ids).sum()) + 1000.0
        return float(self.beta)

    def validate(self, zone_ids):
        a = self.alpha_vector(zone_ids)
        if np.any(a < 0):
            raise ParamViolation("alpha weights must be non-negative")
        if self.gamma < 1:
            raise ParamViolation(f"gamma={self.gamma} must be >= 1")
        beta = self.beta_value(zone_ids)
        if not beta > a.sum():
            raise ParamViolation(f"beta={beta} must exceed sum(alpha)={a.sum()}")
        if self.horizon <= 0:
            raise ParamViolation("horizon must be positive")


@dataclass
class ObjectiveSpec:
    edge_cost: np.ndarray  # per vehicle edge, in objective units
    beta: float  # per dummy edge
    supply: np.ndarray  # (n_edges, n_zones); None when the balance term is off
    phi: np.ndarray  # (n_zones,)
    alpha: np.ndarray  # (n_zones,)
    zone_ids: list = field(default_factory=list)

    @property
    def has_balance(self):
        return self.supply is not None and bool(np.any(self.alpha > 0))


M_PER_COST_UNIT = 1000.0  # VMT enters the objective in kilometres


def assemble_objective(graph, phi, params):
    """Linear coefficients for the integrated objective.

    Singleton trips served by idle or rebalancing vehicles cost ``gamma * u``;
    all other vehicle edges cost ``u``; each unserved request costs ``beta``.
    The absolute zone deviation is carried by ``alpha`` and linearised by the
    solver.
    """
    zone_ids = list(graph.zone_ids)
    params.validate(zone_ids)
    cost = np.empty(len(graph.edges))
    for k, e in enumerate(graph.edges):
        c = e.u / M_PER_COST_UNIT
        if e.kind == "trip" and len(e.trip) == 1 and e.vehicle_state in ("idle", "rebalancing"):
            c *= params.gamma
        cost[k] = c
    alpha = params.alpha_vector(zone_ids)
    if graph.supply is None:
        supply = None
    else:
        supply = graph.supply
    phi_vec = phi.vector(zone_ids) if phi is not None else np.zeros(len(zone_ids))
    return ObjectiveSpec(cost, params.beta_value(zone_ids), supply, phi_vec, alpha, zone_ids)
