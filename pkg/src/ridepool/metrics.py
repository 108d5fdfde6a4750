"""Performance measures recomputed from an event journal.

Requests are attributed to the window of their arrival time. Distance is
attributed by the move event's (arrival) time and its kind, which reflects
the vehicle's state while driving: ``move_active`` (passenger onboard),
``move_deadhead`` (serving, empty) and ``move_rebalance``.
"""

import dataclasses
import json
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from . import journal as J

KM = 1000.0


@dataclass
class MetricsReport:
    requests: int
    served: int
    expired: int
    service_rate: float = None
    vmr: float = None
    active_vmr: float = None
    idle_vmr: float = None
    rebalancing_vmr: float = None
    shared_trip_ratio: float = None
    avg_wait: float = None
    avg_delay: float = None
    avg_occupancy: float = None
    vmt_km: dict = field(default_factory=dict)
    tour_sizes: list = field(default_factory=list)
    tour_distances_km: list = field(default_factory=list)

    SCALARS = ("requests", "served", "expired", "service_rate", "vmr", "active_vmr", "idle_vmr",
               "rebalancing_vmr", "shared_trip_ratio", "avg_wait", "avg_delay", "avg_occupancy")

    def to_dict(self):
        return dataclasses.asdict(self)

    def to_json(self, **extra):
        doc = dict(extra)
        doc["metrics"] = self.to_dict()
        return json.dumps(doc, indent=2, sort_keys=True, default=str)

    def row(self):
        out = {k: getattr(self, k) for k in self.SCALARS}
        out["mean_tour_size"] = float(np.mean(self.tour_sizes)) if self.tour_sizes else None
        out["mean_tour_km"] = float(np.mean(self.tour_distances_km)) if self.tour_distances_km else None
        return out


def _edge_lengths(events, net):
    """Yield ``(event, vehicle_id, meters)`` for every move event."""
    last = {}
    index = net.index
    for e in events:
        if e.kind == J.INIT:
            last[e.vehicle_id] = index[e.node]
        elif e.kind in J.MOVES:
            cur = index[e.node]
            yield e, net.edge_length(last[e.vehicle_id], cur)
            last[e.vehicle_id] = cur


def _onboard_intervals(events):
    """request id -> (vehicle, pickup time, dropoff time, dropoff node) for served requests."""
    picked = {}
    out = {}
    for e in events:
        if e.kind == J.PICKUP:
            picked[e.request_id] = (e.vehicle_id, e.time)
        elif e.kind == J.DROPOFF:
            vid, tp = picked.pop(e.request_id)
            out[e.request_id] = (vid, tp, e.time, e.node)
    return out


def _active_occupancy(events, capacity, ws, we):
    """Time-weighted mean occupancy share over periods vehicles are active, clipped to the window."""
    active = {}
    occ = {}
    since = {}
    area = 0.0
    span = 0.0

    def close(vid, t):
        nonlocal area, span
        a, b = max(since[vid], ws), min(t, we)
        if b > a:
            area += (b - a) * occ.get(vid, 0)
            span += b - a

    for e in events:
        vid = e.vehicle_id
        if vid is None:
            continue
        if e.kind == J.ASSIGN and not active.get(vid):
            active[vid] = True
            since[vid] = e.time
        elif e.kind in (J.PICKUP, J.DROPOFF):
            if active.get(vid):
                close(vid, e.time)
                since[vid] = e.time
            occ[vid] = e.occupancy
        elif e.kind == J.IDLE and active.get(vid):
            close(vid, e.time)
            active[vid] = False
    if span <= 0:
        return None
    return area / span / capacity


def compute_metrics(events, config, net, tables):
    """MetricsReport over the measurement window of ``config``."""
    events = list(events)
    ws, we = config.window
    arrivals = {}
    origin = {}
    for e in events:
        if e.kind == J.REQUEST:
            arrivals[e.request_id] = e.time
            origin[e.request_id] = e.node
    in_window = {rid for rid, t in arrivals.items() if ws <= t < we}
    expired = sum(1 for e in events if e.kind == J.EXPIRE and e.request_id in in_window)
    rides = {rid: v for rid, v in _onboard_intervals(events).items() if rid in in_window}
    n_req, n_served = len(in_window), len(rides)

    vmt = {"active": 0.0, "deadhead": 0.0, "rebalancing": 0.0}
    mode = {J.MOVE_ACTIVE: "active", J.MOVE_DEADHEAD: "deadhead", J.MOVE_REBALANCE: "rebalancing"}
    for e, meters in _edge_lengths(events, net):
        if ws <= e.time < we:
            vmt[mode[e.kind]] += meters
    vmt_km = {k: v / KM for k, v in vmt.items()}

    report = MetricsReport(n_req, n_served, expired, vmt_km=vmt_km)
    if n_req:
        report.service_rate = n_served / n_req
    tours = tour_statistics(events, net, window=(ws, we))
    report.tour_sizes = [s for s, _ in tours]
    report.tour_distances_km = [d for _, d in tours]
    report.avg_occupancy = _active_occupancy(events, config.capacity, ws, we)
    if not n_served:
        return report

    report.active_vmr = vmt_km["active"] / n_served
    report.idle_vmr = vmt_km["deadhead"] / n_served
    report.rebalancing_vmr = vmt_km["rebalancing"] / n_served
    report.vmr = report.active_vmr + report.idle_vmr + report.rebalancing_vmr

    # every served request's ride, including outside the window, can overlap ours
    all_rides = _onboard_intervals(events)
    by_vehicle = defaultdict(list)
    for rid, (vid, tp, td, _) in all_rides.items():
        by_vehicle[vid].append((tp, td, rid))
    shared = 0
    waits, delays = [], []
    index = net.index
    for rid, (vid, tp, td, dnode) in rides.items():
        if any(other != rid and max(tp, a) < min(td, b) for a, b, other in by_vehicle[vid]):
            shared += 1
        waits.append(tp - arrivals[rid])
        direct = tables.time[index[origin[rid]], index[dnode]]
        delays.append(td - tp - direct)
    report.shared_trip_ratio = shared / n_served
    report.avg_wait = float(np.mean(waits))
    report.avg_delay = float(np.mean(delays))
    return report


def tour_statistics(events, net, window=None):
    """``[(size, km)]`` for completed tours, in order of completion.

    A tour runs from an assignment to a vehicle that is not already serving
    until that vehicle next goes idle. Size counts distinct passengers picked
    up; distance sums active and deadhead moves. With ``window``, only tours
    starting inside it are kept.
    """
    lengths = {id(e): m for e, m in _edge_lengths(events, net)}
    open_tours = {}
    done = []
    for e in events:
        vid = e.vehicle_id
        if vid is None:
            continue
        tour = open_tours.get(vid)
        if e.kind == J.ASSIGN and tour is None:
            open_tours[vid] = {"start": e.time, "riders": set(), "m": 0.0}
        elif tour is None:
            continue
        elif e.kind == J.PICKUP:
            tour["riders"].add(e.request_id)
        elif e.kind in (J.MOVE_ACTIVE, J.MOVE_DEADHEAD):
            tour["m"] += lengths[id(e)]
        elif e.kind == J.IDLE:
            del open_tours[vid]
            if window is None or window[0] <= tour["start"] < window[1]:
                done.append((len(tour["riders"]), tour["m"] / KM))
    return done
