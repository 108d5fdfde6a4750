"""Shareability graph, trip enumeration and the vehicle/trip/zone graph."""

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .routing import insertion_feasible, pairwise_shareable

IDLE = "idle"
REBALANCING = "rebalancing"
ACTIVE = "active"


@dataclass
class PRSGraph:
    request_ids: list
    adjacency: dict  # request id -> set of shareable request ids

    @property
    def edges(self):
        out = set()
        for a, nbrs in self.adjacency.items():
            for b in nbrs:
                out.add(frozenset((a, b)))
        return out

    def shareable(self, a, b):
        return b in self.adjacency.get(a, ())


def build_prs_graph(requests, now, context, capacity=4):
    ids = [r.id for r in requests]
    adj = {rid: set() for rid in ids}
    for r1, r2 in combinations(requests, 2):
        if pairwise_shareable(r1, r2, now, context, capacity):
            adj[r1.id].add(r2.id)
            adj[r2.id].add(r1.id)
    return PRSGraph(ids, adj)


@dataclass(frozen=True)
class Trip:
    requests: tuple  # request ids in canonical order

    @property
    def id(self):
        return self.requests

    @property
    def size(self):
        return len(self.requests)

    def __len__(self):
        return len(self.requests)


@dataclass
class TripSet:
    trips: list
    feasible: dict  # trip id -> [(vehicle id, Schedule)] sorted by vehicle id
    requests: dict  # request id -> Request


def candidate_vehicles(fleet, request, now, omega, tables, limit=None):
    """Vehicles with a free seat that can reach the request origin in its wait window."""
    if not fleet:
        return []
    nodes = np.fromiter((v.node for v in fleet), dtype=np.int64, count=len(fleet))
    ready = np.fromiter((max(now, v.ready_time) for v in fleet), dtype=float, count=len(fleet))
    free = np.fromiter((v.free_seats for v in fleet), dtype=np.int64, count=len(fleet))
    reach = ready + tables.time[nodes, request.origin]
    ok = np.flatnonzero((reach <= request.arrival_time + omega + 1e-9) & (free > 0))
    if limit is not None and len(ok) > limit:
        ok = ok[np.lexsort((ok, reach[ok]))][:limit]
        ok.sort()
    return [fleet[i] for i in ok]


def enumerate_trips(prs, fleet, requests, now, context, capacity=4,
                    max_trips_per_size=None, max_vehicles_per_request=None):
    """Grow feasible trips clique by clique.

    A size-k trip is considered only if it is a PRS clique whose every
    (k-1)-subset was retained; it is kept if at least one vehicle among those
    serving all its subsets can insert it.
    """
    fleet = sorted(fleet, key=lambda v: v.id)
    by_id = {r.id: r for r in requests}
    order = {r.id: k for k, r in enumerate(requests)}
    vehicles = {v.id: v for v in fleet}

    trips = []
    feasible = {}
    level = {}  # trip key -> set of vehicle ids able to serve it
    for r in requests:
        cands = candidate_vehicles(fleet, r, now, context.omega, context.tables, max_vehicles_per_request)
        found = []
        for v in cands:
            sched = insertion_feasible(v, [r], now, context)
            if sched is not None:
                found.append((v.id, sched))
        if found:
            key = (r.id,)
            trips.append(Trip(key))
            feasible[key] = found
            level[key] = {vid for vid, _ in found}
        if max_trips_per_size is not None and len(level) >= max_trips_per_size:
            break

    for k in range(2, capacity + 1):
        nxt = {}
        for key in sorted(level, key=lambda t: [order[i] for i in t]):
            last = order[key[-1]]
            members = set(key)
            for r in requests:
                if order[r.id] <= last or r.id in members:
                    continue
                if not all(prs.shareable(r.id, m) for m in key):
                    continue
                new_key = key + (r.id,)
                subsets = [new_key[:i] + new_key[i + 1:] for i in range(len(new_key))]
                if any(s not in level for s in subsets):
                    continue
                cands = set.intersection(*(level[s] for s in subsets))
                if not cands:
                    continue
                reqs = [by_id[i] for i in new_key]
                found = []
                for vid in sorted(cands):
                    sched = insertion_feasible(vehicles[vid], reqs, now, context)
                    if sched is not None:
                        found.append((vid, sched))
                if found:
                    trips.append(Trip(new_key))
                    feasible[new_key] = found
                    nxt[new_key] = {vid for vid, _ in found}
                if max_trips_per_size is not None and len(nxt) >= max_trips_per_size:
                    break
            if max_trips_per_size is not None and len(nxt) >= max_trips_per_size:
                break
        if not nxt:
            break
        level = nxt
    return TripSet(trips, feasible, by_id)


@dataclass
class Edge:
    vehicle_id: int
    vehicle_state: str
    kind: str  # "trip", "zone", "stay" (idle in place) or "keep" (current plan)
    trip: tuple = ()
    zone_id: object = None
    u: float = 0.0  # additional VMT, meters
    schedule: object = None
    target_node: object = None

    @property
    def label(self):
        if self.kind == "trip":
            return "trip:" + "+".join(map(str, self.trip))
        if self.kind == "zone":
            return f"zone:{self.zone_id}"
        return self.kind


@dataclass
class RTVZGraph:
    vehicle_ids: list
    vehicle_state: dict
    request_ids: list  # outstanding requests, each with a dummy edge
    trips: list
    zone_ids: list
    edges: list
    supply: np.ndarray = None  # (n_edges, n_zones) or None

    def partition(self):
        out = {IDLE: [], REBALANCING: [], ACTIVE: []}
        for vid in self.vehicle_ids:
            out[self.vehicle_state[vid]].append(vid)
        return out

    def edges_of(self, vehicle_id):
        return [e for e in self.edges if e.vehicle_id == vehicle_id]

    def dump(self, fh):
        """Write a plain-text listing of nodes and edges."""
        parts = self.partition()
        fh.write(f"# vehicles idle={parts[IDLE]} rebalancing={parts[REBALANCING]} active={parts[ACTIVE]}\n")
        fh.write(f"# requests {self.request_ids}\n")
        fh.write(f"# trips {[list(t.requests) for t in self.trips]}\n")
        fh.write(f"# zones {self.zone_ids}\n")
        fh.write("vehicle,state,edge,u_m,y\n")
        for k, e in enumerate(self.edges):
            if self.supply is None:
                y = ""
            else:
                y = " ".join(f"{z}:{v:.6g}" for z, v in zip(self.zone_ids, self.supply[k]) if v)
            fh.write(f"{e.vehicle_id},{e.vehicle_state},{e.label},{e.u:.3f},{y}\n")
        for rid in self.request_ids:
            fh.write(f"L,dummy,request:{rid},,\n")


def committed_vmt(vehicle, tables):
    D = tables.distance_rows
    cur = vehicle.node
    total = 0.0
    for st in vehicle.stops:
        total += D[cur][st.node]
        cur = st.node
    return total


def build_rtvz_graph(tripset, fleet, zones, tables, now, supply_calc=None, include_zone_edges=True):
    """Assemble every vehicle's options.

    Each vehicle gets one no-op edge (stay idle, or keep its current plan),
    an edge per feasible trip, and, if idle and ``include_zone_edges``, an
    edge to every other zone. With ``supply_calc`` set, each edge carries its
    supply vector as a row of ``supply``.
    """
    fleet = sorted(fleet, key=lambda v: v.id)
    by_vehicle = {}
    for trip in tripset.trips:
        for vid, sched in tripset.feasible[trip.id]:
            by_vehicle.setdefault(vid, []).append((trip.id, sched))

    edges = []
    rows = []
    D = tables.distance_rows
    calc = supply_calc
    for v in fleet:
        state = v.state
        start = max(now, v.ready_time)
        occ = len(v.onboard)
        if state == IDLE:
            edges.append(Edge(v.id, state, "stay", zone_id=zones.zone_of(v.node), target_node=v.node))
            if calc is not None:
                rows.append(calc.stay(v.node))
            base = 0.0
        elif state == REBALANCING:
            edges.append(Edge(v.id, state, "keep", target_node=v.rebalance_target))
            if calc is not None:
                rows.append(calc.rebalance(now, v.node, start, v.rebalance_target))
            base = 0.0
        else:
            edges.append(Edge(v.id, state, "keep"))
            if calc is not None:
                rows.append(calc.route(now, v.node, start, v.stops, occ))
            base = committed_vmt(v, tables)
        for key, sched in sorted(by_vehicle.get(v.id, []), key=lambda x: [str(i) for i in x[0]]):
            u = sched.total_vmt - base if state == ACTIVE else sched.total_vmt
            edges.append(Edge(v.id, state, "trip", trip=key, u=u, schedule=sched))
            if calc is not None:
                rows.append(calc.route(now, v.node, sched.start_time, sched.stops, occ))
        if state == IDLE and include_zone_edges:
            own = zones.zone_of(v.node)
            for z in zones.zones:
                if z.zone_id == own:
                    continue
                c = z.centroid_node
                edges.append(Edge(v.id, state, "zone", zone_id=z.zone_id, u=D[v.node][c], target_node=c))
                if calc is not None:
                    rows.append(calc.rebalance(now, v.node, start, c))

    supply = None
    if calc is not None:
        supply = np.vstack(rows) if rows else np.zeros((0, len(zones)))
    return RTVZGraph(
        vehicle_ids=[v.id for v in fleet],
        vehicle_state={v.id: v.state for v in fleet},
        request_ids=list(tripset.requests),
        trips=list(tripset.trips),
        zone_ids=list(zones.zone_ids),
        edges=edges,
        supply=supply,
    )
