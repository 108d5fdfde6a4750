"""Single-vehicle dial-a-ride routing with time windows and capacity.

The solver enumerates every precedence-respecting stop ordering depth-first,
pruning on capacity, time windows (with a look-ahead on every unvisited
stop) and on accumulated VMT. At ``O = 4`` an instance has at most eight
stops, so the search is exact and fast.
"""

from dataclasses import dataclass

PICKUP = "pickup"
DROPOFF = "dropoff"

_EPS = 1e-9


@dataclass(frozen=True)
class Stop:
    node: int
    kind: str
    request_id: object
    planned_time: float
    load_after: int


@dataclass(frozen=True)
class Schedule:
    start_node: object  # None for a virtual depot
    start_time: float
    stops: tuple
    total_vmt: float
    end_time: float

    @property
    def duration(self):
        return self.end_time - self.start_time

    @property
    def request_ids(self):
        return {s.request_id for s in self.stops}


@dataclass(frozen=True)
class RoutingContext:
    tables: object
    omega: float
    max_delay: float


@dataclass
class RoutingInstance:
    """One vehicle, the requests it must pick up and those already aboard.

    ``depot`` is the node the vehicle is at (or committed to reach) at
    ``start_time``; ``None`` makes a virtual depot with zero cost to every
    pickup, used for pairwise shareability.
    """

    depot: object
    start_time: float
    capacity: int
    pickups: list  # Request objects still to be picked up
    onboard: list  # (Request, actual pickup time)
    context: RoutingContext

    @property
    def n_stops(self):
        return 2 * len(self.pickups) + len(self.onboard)


def _stop_key(request_id, kind):
    return (str(request_id), 0 if kind == PICKUP else 1)


def solve_darp(inst):
    """Minimum-VMT feasible stop ordering, or ``None`` when infeasible.

    Ties on VMT go to the earlier completion time, then to the
    lexicographically smaller stop sequence.
    """
    ctx = inst.context
    T = ctx.tables.time_rows
    D = ctx.tables.distance_rows
    omega, max_delay = ctx.omega, ctx.max_delay
    cap = inst.capacity

    p = len(inst.pickups)
    q = len(inst.onboard)
    if q > cap:
        return None

    # stop s < p: pickup of pickups[s]; p <= s < 2p: its dropoff; s >= 2p: onboard dropoff
    nodes, kinds, rids, earliest, latest, partner = [], [], [], [], [], []
    for r in inst.pickups:
        nodes.append(r.origin)
        kinds.append(PICKUP)
        rids.append(r.id)
        earliest.append(r.arrival_time)
        latest.append(r.arrival_time + omega)
    taus = [r.direct_time for r in inst.pickups]
    for k, r in enumerate(inst.pickups):
        nodes.append(r.destination)
        kinds.append(DROPOFF)
        rids.append(r.id)
        earliest.append(0.0)
        latest.append(float("inf"))  # set once the pickup time is known
    for r, t_pick in inst.onboard:
        nodes.append(r.destination)
        kinds.append(DROPOFF)
        rids.append(r.id)
        earliest.append(0.0)
        latest.append(t_pick + r.direct_time + max_delay)
    n = len(nodes)
    order = sorted(range(n), key=lambda s: _stop_key(rids[s], kinds[s]))
    is_pickup = [s < p for s in range(n)]
    partner = [s + p if s < p else (s - p if s < 2 * p else -1) for s in range(n)]
    deadline = list(latest)

    best_vmt = float("inf")
    best_end = float("inf")
    best_seq = None
    seq = []  # (stop, service time, load after)

    depot = inst.depot
    t0 = inst.start_time

    # stops already unreachable from the depot make the instance infeasible
    for s in range(n):
        if s < p or s >= 2 * p:
            reach = t0 if depot is None else t0 + T[depot][nodes[s]]
            if reach > latest[s] + _EPS:
                return None

    def rec(cur, t, load, vmt, remaining):
        nonlocal best_vmt, best_end, best_seq
        if not remaining:
            if vmt < best_vmt or (vmt == best_vmt and t < best_end):
                best_vmt, best_end, best_seq = vmt, t, list(seq)
            return
        Tc = T[cur] if cur is not None else None
        Dc = D[cur] if cur is not None else None
        for s in remaining:
            pk = is_pickup[s]
            if pk:
                if load >= cap:
                    continue
            elif s < 2 * p and partner[s] in remaining:
                continue
            node = nodes[s]
            if Tc is None:
                arr, nv = t, vmt
            else:
                arr, nv = t + Tc[node], vmt + Dc[node]
            if nv > best_vmt:
                continue
            if pk:
                if arr > latest[s] + _EPS:
                    continue
                ts = arr if arr > earliest[s] else earliest[s]
                deadline[partner[s]] = ts + taus[s] + max_delay
                nload = load + 1
            else:
                if arr > deadline[s] + _EPS:
                    continue
                ts = arr
                nload = load - 1
            rest = [r for r in remaining if r != s]
            Tn = T[node]
            ok = True
            for r in rest:
                if is_pickup[r]:
                    if ts + Tn[nodes[r]] > latest[r] + _EPS:
                        ok = False
                        break
                elif r >= 2 * p or partner[r] not in rest:
                    if ts + Tn[nodes[r]] > deadline[r] + _EPS:
                        ok = False
                        break
            if not ok:
                continue
            seq.append((s, ts, nload))
            rec(node, ts, nload, nv, rest)
            seq.pop()

    rec(depot, t0, q, 0.0, order)
    if best_seq is None:
        return None
    stops = tuple(Stop(nodes[s], kinds[s], rids[s], ts, ld) for s, ts, ld in best_seq)
    return Schedule(depot, t0, stops, best_vmt, best_end)


def _order_feasible(order, now, context, capacity):
    """Whether a virtual vehicle appearing at the first stop can follow ``order``.

    ``order`` lists ``(request, is_pickup)`` pairs for two requests.
    """
    T = context.tables.time_rows
    t = now
    cur = None
    picked = {}
    load = 0
    for r, pk in order:
        node = r.origin if pk else r.destination
        if cur is not None:
            t += T[cur][node]
        if pk:
            if t > r.arrival_time + context.omega + _EPS:
                return False
            t = max(t, r.arrival_time)
            picked[r.id] = t
            load += 1
            if load > capacity:
                return False
        else:
            if t > picked[r.id] + r.direct_time + context.max_delay + _EPS:
                return False
            load -= 1
        cur = node
    return True


def pairwise_shareable(r1, r2, now, context, capacity=4):
    """Whether one virtual vehicle can carry both requests at the same time.

    The four orderings that have both riders aboard together are checked,
    starting at whichever origin comes first with no approach cost.
    """
    if capacity < 2:
        return False
    orders = (
        ((r1, True), (r2, True), (r1, False), (r2, False)),
        ((r1, True), (r2, True), (r2, False), (r1, False)),
        ((r2, True), (r1, True), (r2, False), (r1, False)),
        ((r2, True), (r1, True), (r1, False), (r2, False)),
    )
    return any(_order_feasible(o, now, context, capacity) for o in orders)


def vehicle_instance(vehicle, trip_requests, now, context):
    start = max(now, vehicle.ready_time)
    pickups = list(vehicle.waiting) + list(trip_requests)
    return RoutingInstance(vehicle.node, start, vehicle.capacity, pickups, list(vehicle.onboard), context)


def insertion_feasible(vehicle, trip_requests, now, context):
    """Optimal schedule for ``vehicle`` serving its current load plus ``trip_requests``.

    ``vehicle`` needs ``node``, ``ready_time``, ``capacity``, ``waiting``
    (matched, not yet picked up) and ``onboard`` ((request, pickup time)
    pairs). Returns ``None`` when infeasible or when the combined request
    set exceeds the capacity.
    """
    total = len(vehicle.waiting) + len(vehicle.onboard) + len(trip_requests)
    if total > vehicle.capacity:
        return None
    return solve_darp(vehicle_instance(vehicle, trip_requests, now, context))


def replay_schedule(schedule, tables, arrival_times):
    """Recompute stop times and VMT by walking the stop list from the depot.

    ``arrival_times`` maps request id to request time (the earliest pickup).
    Returns ``(times, vmt)``.
    """
    cur = schedule.start_node
    t = schedule.start_time
    vmt = 0.0
    times = []
    for st in schedule.stops:
        if cur is not None:
            t += tables.time[cur, st.node]
            vmt += tables.distance[cur, st.node]
        if st.kind == PICKUP:
            t = max(t, arrival_times[st.request_id])
        times.append(t)
        cur = st.node
    return times, vmt
