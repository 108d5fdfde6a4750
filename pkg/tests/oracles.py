"""Independent reference implementations used as test oracles.

These are deliberately naive: plain Dijkstra, unpruned permutation search,
exhaustive assignment enumeration and a line-by-line journal recount.
"""

import heapq
import itertools
import math
from collections import defaultdict

import numpy as np

from ridepool.demand import Request
from ridepool.network import load_network


def dijkstra(net, src):
    """(time, length-along-that-path) from ``src`` to every node index."""
    adj = defaultdict(list)
    for u, v, length, t in net.edges:
        adj[u].append((v, t, length))
    time = [math.inf] * net.n_nodes
    dist = [math.inf] * net.n_nodes
    time[src] = 0.0
    dist[src] = 0.0
    heap = [(0.0, src)]
    done = set()
    while heap:
        t, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for v, dt, dl in adj[u]:
            if t + dt < time[v]:
                time[v] = t + dt
                dist[v] = dist[u] + dl
                heapq.heappush(heap, (time[v], v))
    return time, dist


def random_network(n, seed, extra_edges=2, strongly_connected=True):
    """Random planar-ish digraph: a bidirectional ring plus random chords."""
    rng = np.random.default_rng(seed)
    xy = rng.uniform(0, 5000, size=(n, 2))
    nodes = [{"node_id": i, "x": x, "y": y} for i, (x, y) in enumerate(xy)]
    edges = []

    def add(a, b):
        length = float(np.hypot(*(xy[a] - xy[b]))) + 1.0
        edges.append({"from": a, "to": b, "length_m": length, "time_s": length / rng.uniform(5, 15)})

    if strongly_connected:
        for i in range(n):
            add(i, (i + 1) % n)
            add((i + 1) % n, i)
    for _ in range(extra_edges * n):
        a, b = rng.integers(n, size=2)
        if a != b:
            add(int(a), int(b))
    return load_network(nodes, edges)


def stop_list(pickups, onboard):
    """Every stop of a routing instance as (kind, request, node)."""
    stops = [("P", r, r.origin) for r in pickups]
    stops += [("D", r, r.destination) for r in pickups]
    stops += [("D", r, r.destination) for r, _ in onboard]
    return stops


def check_order(order, depot, start_time, capacity, onboard, tables, omega, max_delay):
    """Simulate one stop ordering; returns (vmt, end time) or None when infeasible."""
    T, D = tables.time, tables.distance
    picked = {r.id: tp for r, tp in onboard}
    load = len(onboard)
    t = start_time
    vmt = 0.0
    cur = depot
    for kind, r, node in order:
        if cur is not None:
            t += T[cur, node]
            vmt += D[cur, node]
        if kind == "P":
            if r.id in picked:
                return None
            if t > r.arrival_time + omega + 1e-9:
                return None
            t = max(t, r.arrival_time)
            load += 1
            if load > capacity:
                return None
            picked[r.id] = t
        else:
            if r.id not in picked:
                return None
            if t - picked[r.id] - r.direct_time > max_delay + 1e-9:
                return None
            load -= 1
        cur = node
    return vmt, t


def precedence_orders(pickups, onboard):
    """Every stop sequence with each pickup before its dropoff (no other filtering)."""
    stops = stop_list(pickups, onboard)
    out = []

    def rec(seq, left, picked):
        if not left:
            out.append(tuple(seq))
            return
        for k, st in enumerate(left):
            kind, r, _ = st
            if kind == "D" and r.id not in picked and any(s[0] == "P" and s[1].id == r.id for s in left):
                continue
            seq.append(st)
            rec(seq, left[:k] + left[k + 1:], picked | ({r.id} if kind == "P" else set()))
            seq.pop()

    rec([], stops, frozenset())
    return out


def brute_force_darp(depot, start_time, capacity, pickups, onboard, tables, omega, max_delay):
    """Minimum VMT over every precedence-valid ordering, each checked in full; None if infeasible."""
    if len(onboard) > capacity:
        return None
    best = None
    for order in precedence_orders(pickups, onboard):
        res = check_order(order, depot, start_time, capacity, onboard, tables, omega, max_delay)
        if res is not None and (best is None or res[0] < best - 1e-9):
            best = res[0]
    return best


def pair_shareable_oracle(r1, r2, now, tables, omega, max_delay, capacity=4):
    """Check the four orderings with both riders aboard together, from a virtual depot."""
    P1, D1 = ("P", r1, r1.origin), ("D", r1, r1.destination)
    P2, D2 = ("P", r2, r2.origin), ("D", r2, r2.destination)
    orders = [
        (P1, P2, D1, D2), (P1, P2, D2, D1), (P2, P1, D2, D1), (P2, P1, D1, D2),
    ]
    for order in orders:
        first = order[0][1]
        # virtual depot: the vehicle appears at the first pickup at its earliest time
        t0 = max(now, first.arrival_time)
        if check_order(order, order[0][2], t0, capacity, [], tables, omega, max_delay) is not None:
            if now <= first.arrival_time + omega + 1e-9:
                return True
    return False


def brute_force_assignment(graph, objective):
    """Exhaustive minimum over all per-vehicle edge choices.

    Each vehicle picks exactly one of its edges; requests not covered pay
    beta; a choice covering some request twice is invalid. The deviation
    term is evaluated directly as sum(alpha * |phi - supply|). Every
    combination is scored, vectorised with numpy.
    """
    n_req = len(graph.request_ids)
    if not graph.vehicle_ids:
        return objective.beta * n_req
    by_vehicle = defaultdict(list)
    for k, e in enumerate(graph.edges):
        by_vehicle[e.vehicle_id].append(k)
    choices = [by_vehicle[v] for v in graph.vehicle_ids]
    bit = {rid: 1 << i for i, rid in enumerate(graph.request_ids)}
    mask = np.array([sum(bit[r] for r in e.trip) if e.kind == "trip" else 0 for e in graph.edges], dtype=np.int64)
    count = np.array([len(e.trip) if e.kind == "trip" else 0 for e in graph.edges])
    combos = np.array(list(itertools.product(*choices)), dtype=np.int64)
    union = np.bitwise_or.reduce(mask[combos], axis=1)
    covered = count[combos].sum(axis=1)
    popcount = np.array([bin(int(u)).count("1") for u in union])
    valid = popcount == covered
    val = objective.edge_cost[combos].sum(axis=1) + objective.beta * (n_req - covered)
    if objective.has_balance:
        supply = objective.supply[combos].sum(axis=1)
        val = val + np.abs(objective.phi - supply) @ objective.alpha
    return float(val[valid].min())


def rtv_matching_optimum(graph, beta):
    """Pure trip-vehicle matching optimum: sum of trip VMT in km plus beta per unserved request.

    Zone and balance information is ignored; each vehicle either keeps its
    current plan at no cost or takes one of its trip edges.
    """
    trips = defaultdict(list)
    for e in graph.edges:
        if e.kind == "trip":
            trips[e.vehicle_id].append((e.u / 1000.0, frozenset(e.trip)))
    best = math.inf
    n_req = len(graph.request_ids)
    options = [[(0.0, frozenset())] + trips[v] for v in graph.vehicle_ids]
    for combo in itertools.product(*options):
        served = set()
        cost = 0.0
        ok = True
        for u, reqs in combo:
            if served & reqs:
                ok = False
                break
            served |= reqs
            cost += u
        if ok:
            best = min(best, cost + beta * (n_req - len(served)))
    return best


def journal_violations(events, state, config, net, tables):
    """List of invariant violations found by replaying a journal against the final state."""
    bad = []
    arrival, pick, drop, origin, dest = {}, {}, {}, {}, {}
    pos = {}
    odo = defaultdict(float)
    expired = set()
    last_t = -math.inf
    for e in events:
        if e.time < last_t:
            bad.append(f"time goes backwards at {e}")
        last_t = e.time
        if e.kind == "init":
            pos[e.vehicle_id] = net.index[e.node]
        elif e.kind == "request":
            arrival[e.request_id] = e.time
        elif e.kind == "expire":
            expired.add(e.request_id)
        elif e.kind == "pickup":
            pick[e.request_id] = e.time
            origin[e.request_id] = net.index[e.node]
        elif e.kind == "dropoff":
            drop[e.request_id] = e.time
            dest[e.request_id] = net.index[e.node]
        if e.kind.startswith("move_"):
            a, b = pos[e.vehicle_id], net.index[e.node]
            if (a, b) not in net.edge_map:
                bad.append(f"vehicle {e.vehicle_id} jumps {a}->{b} at {e.time}")
            else:
                odo[e.vehicle_id] += net.edge_map[(a, b)][0]
            pos[e.vehicle_id] = b
        if e.occupancy is not None and not 0 <= e.occupancy <= config.capacity:
            bad.append(f"occupancy {e.occupancy} at {e}")
    in_system = {r.id for r in state.outstanding}
    for v in state.fleet:
        in_system |= {r.id for r in v.waiting} | {r.id for r, _ in v.onboard}
    for rid in arrival:
        n = (rid in drop) + (rid in expired) + (rid in in_system)
        if n != 1:
            bad.append(f"request {rid} is in {n} end states")
    for rid, t in pick.items():
        if t - arrival[rid] > config.omega + 1e-6:
            bad.append(f"request {rid} waited {t - arrival[rid]}")
    for rid, t in drop.items():
        delay = t - pick[rid] - tables.time[origin[rid], dest[rid]]
        if delay > config.max_delay + 1e-6:
            bad.append(f"request {rid} delayed {delay}")
    for v in state.fleet:
        if abs(sum(v.odometer.values()) - v.total_distance) > 1e-6:
            bad.append(f"vehicle {v.id} odometer split does not add up")
        if abs(odo[v.id] - v.total_distance) > 1e-6:
            bad.append(f"vehicle {v.id} journal distance {odo[v.id]} != odometer {v.total_distance}")
    return bad


def recount(journal_text, net, tables, window, capacity):
    """Straightforward metric recount from journal text."""
    lines = [ln for ln in journal_text.splitlines() if ln and not ln.startswith("#")][1:]
    rows = []
    for ln in lines:
        t, kind, vid, rid, node, occ = ln.split(",")
        rows.append((float(t), kind, vid, rid, node, occ))
    ws, we = window
    arrival, origin, pick, drop, dnode, veh = {}, {}, {}, {}, {}, {}
    pos = {}
    km = {"move_active": 0.0, "move_deadhead": 0.0, "move_rebalance": 0.0}
    for t, kind, vid, rid, node, occ in rows:
        if kind == "init":
            pos[vid] = node
        elif kind == "request":
            arrival[rid] = t
            origin[rid] = node
        elif kind == "pickup":
            pick[rid] = t
            veh[rid] = vid
        elif kind == "dropoff":
            drop[rid] = t
            dnode[rid] = node
        elif kind in km:
            a, b = net.index[int(pos[vid])], net.index[int(node)]
            if ws <= t < we:
                km[kind] += net.edge_map[(a, b)][0] / 1000.0
            pos[vid] = node
    mine = [r for r in arrival if ws <= arrival[r] < we]
    served = [r for r in mine if r in drop]
    out = {"requests": len(mine), "served": len(served)}
    if not served:
        return out
    n = len(served)
    out["active_vmr"] = km["move_active"] / n
    out["idle_vmr"] = km["move_deadhead"] / n
    out["rebalancing_vmr"] = km["move_rebalance"] / n
    out["service_rate"] = n / len(mine)
    out["avg_wait"] = sum(pick[r] - arrival[r] for r in served) / n
    out["avg_delay"] = sum(
        drop[r] - pick[r] - tables.time[net.index[int(origin[r])], net.index[int(dnode[r])]] for r in served
    ) / n
    shared = 0
    for r in served:
        for q in pick:
            if q != r and q in drop and veh[q] == veh[r]:
                if min(drop[r], drop[q]) > max(pick[r], pick[q]):
                    shared += 1
                    break
    out["shared_trip_ratio"] = shared / n
    return out


def make_request(rid, o, d, t, tables):
    return Request(rid, o, d, float(t), float(tables.time[o, d]))


def random_darp_case(rng, tables, n_requests, n_onboard=0, capacity=4):
    """Random vehicle state plus requests on ``tables``; returns a dict of solver inputs."""
    n = tables.n_nodes
    now = 1000.0
    omega = float(rng.choice([120.0, 300.0, 420.0]))
    max_delay = float(rng.choice([120.0, 300.0, 900.0]))

    def req(rid, t):
        o, d = (int(x) for x in rng.choice(n, size=2, replace=False))
        return make_request(rid, o, d, t, tables)

    pickups = [req(f"r{k}", now + rng.uniform(-omega, 300.0)) for k in range(n_requests)]
    onboard = []
    for k in range(n_onboard):
        r = req(f"q{k}", now - rng.uniform(100, 400))
        onboard.append((r, r.arrival_time + rng.uniform(0, 60)))
    return {
        "depot": int(rng.integers(n)),
        "start_time": now + float(rng.choice([0.0, rng.uniform(0, 60)])),
        "capacity": capacity,
        "pickups": pickups,
        "onboard": onboard,
        "omega": omega,
        "max_delay": max_delay,
    }


def overlap_oracle(t, h, length):
    """Share of [t, t+h] inside the interval containing t, by interval intersection."""
    k = math.floor(t / length)
    lo, hi = k * length, (k + 1) * length
    return (max(0.0, min(hi, t + h) - max(lo, t))) / h
