"""Rolling-horizon fleet simulation.

Each call to ``step_epoch`` moves the fleet through one epoch of length
``epoch`` along committed plans, then takes a decision at the epoch's end:
new requests are ingested, hopeless ones expire, the variant's matching
pipeline runs and its decisions are committed.

A vehicle is always described by ``node`` and ``ready_time``: the node it
stands on, or the head node of the edge it is driving, and the time it is
(or will be) there. Vehicles finish their current edge before adopting a
new plan.
"""

import dataclasses
import logging
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import journal as J
from .assignment import build_model, solve_assignment
from .costs import CostParams, SupplyCalculator, assemble_objective
from .demand import target_supply
from .errors import ConfigError, EmptyZoneSet
from .graphs import ACTIVE, IDLE, REBALANCING, build_prs_graph, build_rtvz_graph, enumerate_trips
from .network import path_between
from .rebalancing import probabilistic_rebalance
from .routing import PICKUP, RoutingContext

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Variant:
    name: str
    balance: bool  # supply-deviation term in the objective
    zones: bool  # vehicle-to-zone edges
    sequential_rebalance: bool
    induced_sharing: bool = False


VARIANTS = {
    v.name: v
    for v in (
        Variant("Sequential", False, False, True),
        Variant("SQ-Base", False, False, False),
        Variant("Integrated", True, True, False),
        Variant("Integrated-Base", True, False, False),
        Variant("Integrated-Sequential", True, False, True),
        Variant("Integrated-IS", True, True, False, induced_sharing=True),
    )
}


def get_variant(name):
    try:
        return VARIANTS[name]
    except KeyError:
        raise ConfigError(f"unknown variant {name!r}; expected one of {sorted(VARIANTS)}") from None


@dataclass
class SimConfig:
    variant: str = "Integrated"
    fleet_size: int = 100
    capacity: int = 4
    epoch: float = 30.0
    horizon: float = 600.0
    omega: float = 420.0
    max_delay: float = 900.0
    alpha: object = 1.0
    beta: float = None
    gamma: float = None  # None: 5 for Integrated-IS, 1 otherwise
    start_time: float = 0.0
    warmup: float = 3600.0
    measurement: float = 3600.0
    cooloff: float = 3600.0
    seed: int = 0
    solver_time_budget: float = 10.0
    max_trips_per_size: int = None
    max_vehicles_per_request: int = None
    interval_length: float = 900.0

    @property
    def gamma_value(self):
        if self.gamma is not None:
            return float(self.gamma)
        return 5.0 if get_variant(self.variant).induced_sharing else 1.0

    @property
    def window(self):
        ws = self.start_time + self.warmup
        return ws, ws + self.measurement

    @property
    def end_time(self):
        return self.start_time + self.warmup + self.measurement + self.cooloff

    def validate(self):
        get_variant(self.variant)
        if self.epoch <= 0:
            raise ConfigError("epoch must be positive")
        if self.omega <= 0 or self.max_delay <= 0:
            raise ConfigError("omega and max_delay must be positive")
        if self.horizon <= 0:
            raise ConfigError("horizon must be positive")
        if self.capacity < 1 or self.fleet_size < 0:
            raise ConfigError("capacity must be >= 1 and fleet_size >= 0")
        if self.gamma_value < 1:
            raise ConfigError("gamma must be >= 1")
        for name in ("warmup", "measurement", "cooloff"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        return self

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d).validate()


@dataclass
class Vehicle:
    id: int
    capacity: int
    node: int
    ready_time: float = 0.0
    state: str = IDLE
    stops: list = field(default_factory=list)  # committed remaining stops
    waiting: list = field(default_factory=list)  # matched, not yet picked up
    onboard: list = field(default_factory=list)  # (Request, pickup time)
    rebalance_target: int = None
    rebalance_zone: object = None
    odometer: dict = field(default_factory=lambda: {"active": 0.0, "deadhead": 0.0, "rebalancing": 0.0})
    total_distance: float = 0.0
    _path: deque = field(default=None, repr=False)
    _path_target: int = field(default=None, repr=False)
    _edge_from: int = field(default=None, repr=False)  # set while driving an edge
    _edge_mode: str = field(default=None, repr=False)

    @property
    def free_seats(self):
        return self.capacity - len(self.waiting) - len(self.onboard)

    @property
    def occupancy(self):
        return len(self.onboard)

    @property
    def matched_requests(self):
        return list(self.waiting) + [r for r, _ in self.onboard]

    def target(self):
        if self.state == ACTIVE and self.stops:
            return self.stops[0].node
        if self.state == REBALANCING:
            return self.rebalance_target
        return None

    def reset_path(self):
        self._path = None
        self._path_target = None


@dataclass
class Engine:
    """Immutable scenario context shared by every epoch."""

    net: object
    tables: object
    zones: object
    rates: object
    config: SimConfig
    variant: Variant
    context: RoutingContext
    supply: SupplyCalculator


def make_engine(config, net, tables, zones, rates):
    config.validate()
    ctx = RoutingContext(tables, config.omega, config.max_delay)
    calc = SupplyCalculator(zones, tables, config.horizon, config.capacity)
    return Engine(net, tables, zones, rates, config, get_variant(config.variant), ctx, calc)


@dataclass
class EpochState:
    engine: Engine
    clock: float
    fleet: list
    outstanding: list = field(default_factory=list)
    served: list = field(default_factory=list)
    expired: list = field(default_factory=list)
    ingested: int = 0
    journal: J.Journal = field(default_factory=J.Journal)
    rng: np.random.Generator = None
    solver_suboptimal: int = 0


def initialize_fleet(net, zones, rates, fleet_size, seed, capacity=4, start_time=0.0):
    """Place vehicles in zones proportionally to the start-interval demand.

    Counts use largest-remainder rounding (ties to the lower zone); within a
    zone each vehicle lands on a uniformly drawn member node.
    """
    if len(zones) == 0:
        raise EmptyZoneSet("no zones to place vehicles in")
    rng = np.random.default_rng(seed)
    k = int(math.floor(start_time / rates.interval_length))
    w = rates.zone_rates(k, zones.zone_ids)
    if w.sum() <= 0:
        w = np.ones(len(zones))
    quota = fleet_size * w / w.sum()
    counts = np.floor(quota + 1e-9).astype(int)
    left = fleet_size - int(counts.sum())
    frac = quota - counts
    for pos in sorted(range(len(zones)), key=lambda p: (-round(frac[p], 12), p))[:left]:
        counts[pos] += 1
    fleet = []
    for pos, n in enumerate(counts):
        members = zones.members[pos]
        for _ in range(n):
            node = members[int(rng.integers(len(members)))]
            fleet.append(Vehicle(len(fleet), capacity, node, float(start_time)))
    return fleet


def new_state(engine, seed=None):
    cfg = engine.config
    seed = cfg.seed if seed is None else seed
    fleet = initialize_fleet(engine.net, engine.zones, engine.rates, cfg.fleet_size, seed,
                             cfg.capacity, cfg.start_time)
    state = EpochState(engine, float(cfg.start_time), fleet, rng=np.random.default_rng([seed, 1]))
    for v in fleet:
        state.journal.add(cfg.start_time, J.INIT, v.id, None, engine.net.node_ids[v.node], 0)
    state.journal.flush()
    return state


# -- movement ---------------------------------------------------------------

def _move_mode(v):
    if v.state == REBALANCING:
        return "rebalancing"
    return "active" if v.onboard else "deadhead"


_MOVE_KIND = {"active": J.MOVE_ACTIVE, "deadhead": J.MOVE_DEADHEAD, "rebalancing": J.MOVE_REBALANCE}


def _advance_vehicle(state, v, until):
    eng = state.engine
    net = eng.net
    jr = state.journal
    while True:
        if v._edge_from is not None:
            if v.ready_time > until:
                return
            d = net.edge_length(v._edge_from, v.node)
            v.odometer[v._edge_mode] += d
            v.total_distance += d
            jr.add(v.ready_time, _MOVE_KIND[v._edge_mode], v.id, None, net.node_ids[v.node], len(v.onboard))
            v._edge_from = None
            v._edge_mode = None
        target = v.target()
        if target is None:
            return
        if v.node == target:
            if v.state == REBALANCING:
                v.state = IDLE
                v.rebalance_target = v.rebalance_zone = None
                v.reset_path()
                jr.add(v.ready_time, J.IDLE, v.id, None, net.node_ids[v.node], 0)
                return
            stop = v.stops[0]
            t = v.ready_time
            if stop.kind == PICKUP:
                req = next(r for r in v.waiting if r.id == stop.request_id)
                t = max(t, req.arrival_time)
                if t > until:
                    return
                req.pickup_time = t
                v.waiting.remove(req)
                v.onboard.append((req, t))
                jr.add(t, J.PICKUP, v.id, req.id, net.node_ids[v.node], len(v.onboard))
            else:
                k = next(i for i, (r, _) in enumerate(v.onboard) if r.id == stop.request_id)
                req, _ = v.onboard.pop(k)
                req.dropoff_time = t
                state.served.append(req)
                jr.add(t, J.DROPOFF, v.id, req.id, net.node_ids[v.node], len(v.onboard))
            v.ready_time = t
            v.stops.pop(0)
            v.reset_path()
            if not v.stops:
                v.state = IDLE
                jr.add(t, J.IDLE, v.id, None, net.node_ids[v.node], 0)
                return
            continue
        if v.ready_time >= until:
            return
        if v._path is None or v._path_target != target:
            v._path = deque(path_between(eng.tables, v.node, target)[1:])
            v._path_target = target
        nxt = v._path.popleft()
        v._edge_from = v.node
        v._edge_mode = _move_mode(v)
        v.ready_time += net.edge_time(v.node, nxt)
        v.node = nxt


def advance_fleet(state, until):
    for v in state.fleet:
        _advance_vehicle(state, v, until)


# -- decisions --------------------------------------------------------------

def expire_requests(state, now):
    """Drop requests no vehicle can reach before their wait window closes."""
    eng = state.engine
    if not state.outstanding:
        return []
    omega = eng.config.omega
    if state.fleet:
        nodes = np.array([v.node for v in state.fleet])
        ready = np.array([max(now, v.ready_time) for v in state.fleet])
        origins = np.array([r.origin for r in state.outstanding])
        earliest = (ready[:, None] + eng.tables.time[np.ix_(nodes, origins)]).min(axis=0)
    else:
        earliest = np.full(len(state.outstanding), np.inf)
    keep, gone = [], []
    for r, e in zip(state.outstanding, earliest):
        (gone if e > r.arrival_time + omega + 1e-9 else keep).append(r)
    for r in gone:
        state.journal.add(now, J.EXPIRE, None, r.id, eng.net.node_ids[r.origin], None)
    state.outstanding = keep
    state.expired.extend(gone)
    return gone


def plan_epoch(state, now, variant=None):
    """Build graphs, assemble the objective and solve; returns (graph, phi, assignment)."""
    eng = state.engine
    cfg = eng.config
    variant = variant or eng.variant
    reqs = sorted(state.outstanding, key=lambda r: (r.arrival_time, str(r.id)))
    prs = build_prs_graph(reqs, now, eng.context, cfg.capacity)
    trips = enumerate_trips(prs, state.fleet, reqs, now, eng.context, cfg.capacity,
                            cfg.max_trips_per_size, cfg.max_vehicles_per_request)
    calc = eng.supply if variant.balance else None
    graph = build_rtvz_graph(trips, state.fleet, eng.zones, eng.tables, now, calc,
                             include_zone_edges=variant.zones)
    phi = target_supply(eng.rates, now, cfg.horizon, eng.zones.zone_ids)
    params = CostParams(
        alpha=cfg.alpha if variant.balance else 0.0,
        beta=cfg.beta,
        gamma=cfg.gamma_value,
        horizon=cfg.horizon,
    )
    objective = assemble_objective(graph, phi, params)
    model = build_model(graph, objective)
    result = solve_assignment(model, cfg.solver_time_budget)
    return graph, phi, result


def commit(state, assignment, now):
    eng = state.engine
    net = eng.net
    jr = state.journal
    fleet = {v.id: v for v in state.fleet}
    pending = {r.id: r for r in state.outstanding}
    for vid, edge in sorted(assignment.matches.items()):
        v = fleet[vid]
        new = [pending.pop(rid) for rid in edge.trip]
        v.waiting.extend(new)
        v.stops = list(edge.schedule.stops)
        v.state = ACTIVE
        v.rebalance_target = v.rebalance_zone = None
        v.ready_time = max(v.ready_time, now)
        v.reset_path()
        for r in new:
            jr.add(now, J.ASSIGN, v.id, r.id, net.node_ids[v.node], len(v.onboard))
    for vid, edge in sorted(assignment.rebalances.items()):
        _start_rebalance(state, fleet[vid], edge.zone_id, edge.target_node, now)
    state.outstanding = [r for r in state.outstanding if r.id in pending]


def _start_rebalance(state, v, zone_id, target, now):
    v.state = REBALANCING
    v.rebalance_target = target
    v.rebalance_zone = zone_id
    v.ready_time = max(v.ready_time, now)
    v.reset_path()
    state.journal.add(now, J.REBALANCE, v.id, None, state.engine.net.node_ids[target], 0)


def fleet_supply(state, now):
    """Per-zone supply of the fleet's committed plans over ``[now, now + H]``."""
    calc = state.engine.supply
    total = np.zeros(len(state.engine.zones))
    for v in state.fleet:
        start = max(now, v.ready_time)
        if v.state == IDLE:
            total += calc.stay(v.node)
        elif v.state == REBALANCING:
            total += calc.rebalance(now, v.node, start, v.rebalance_target)
        else:
            total += calc.route(now, v.node, start, v.stops, len(v.onboard))
    return total


def sequential_rebalance(state, now, phi):
    eng = state.engine
    idle = [v for v in state.fleet if v.state == IDLE]
    if not idle:
        return None
    supply = fleet_supply(state, now)
    plan = probabilistic_rebalance(idle, phi.vector(eng.zones.zone_ids), supply, eng.zones, eng.tables,
                                   now, eng.config.capacity, state.rng)
    fleet = {v.id: v for v in state.fleet}
    for d in plan.directives:
        _start_rebalance(state, fleet[d.vehicle_id], d.zone_id, d.target_node, now)
    return plan


def step_epoch(state, new_requests, variant=None):
    """Advance one epoch; ``new_requests`` arrive within ``(clock, clock + epoch]``."""
    eng = state.engine
    now = state.clock + eng.config.epoch
    advance_fleet(state, now)
    state.clock = now
    for r in sorted(new_requests, key=lambda r: (r.arrival_time, str(r.id))):
        state.journal.add(r.arrival_time, J.REQUEST, None, r.id, eng.net.node_ids[r.origin], None)
        state.outstanding.append(r)
        state.ingested += 1
    expire_requests(state, now)
    variant = variant or eng.variant
    if state.outstanding or variant.zones or variant.sequential_rebalance:
        _, phi, result = plan_epoch(state, now, variant)
        if not result.optimal:
            state.solver_suboptimal += 1
            log.warning("assignment at t=%s returned a non-optimal incumbent", now)
        commit(state, result, now)
        if variant.sequential_rebalance:
            sequential_rebalance(state, now, phi)
    state.journal.flush()
    return state


def run_simulation(engine, requests, seed=None):
    """Run the full warm-up / measurement / cool-off horizon; returns the final state."""
    cfg = engine.config
    reqs = sorted((dataclasses.replace(r, pickup_time=None, dropoff_time=None) for r in requests),
                  key=lambda r: (r.arrival_time, str(r.id)))
    state = new_state(engine, seed)
    end = cfg.end_time
    i = 0
    while state.clock < end - 1e-9:
        upto = state.clock + cfg.epoch
        batch = []
        while i < len(reqs) and reqs[i].arrival_time <= upto:
            if reqs[i].arrival_time >= cfg.start_time:
                batch.append(reqs[i])
            i += 1
        step_epoch(state, batch)
    return state


def run_scenario(config, requests, net, tables, zones, rates):
    """Simulate ``requests`` under ``config``; returns ``(MetricsReport, Journal, state)``."""
    from .metrics import compute_metrics

    engine = make_engine(config, net, tables, zones, rates)
    tables.require_reachable(
        [(r.origin, r.destination) for r in requests], net.node_ids)
    state = run_simulation(engine, requests)
    report = compute_metrics(state.journal.events, config, net, tables)
    return report, state.journal, state
