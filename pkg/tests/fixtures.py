"""Hand-built scenarios shared by unit and acceptance tests."""

from ridepool.demand import Request
from ridepool.graphs import IDLE, Edge, RTVZGraph, Trip
from ridepool.network import all_pairs_shortest, load_network, zones_from_rectangles
from ridepool.routing import DROPOFF, PICKUP, Schedule, Stop

MIN = 60.0


def worked_route_case():
    """Two-passenger route across three zones with hand-picked segment timings.

    Minutes from departure: pickup 1 at 3, pickup 2 at 5, one more minute in
    zone 1, three minutes into zone 2 to drop 1 at 9, three more minutes in
    zone 2 and two in zone 3 to drop 2 at 14. Horizon 15 minutes, O = 4.
    """
    # node: (x, zone); edge times in minutes between consecutive nodes
    xs = [0, 1, 2, 3, 4, 5, 6]
    hops = [3, 2, 1, 3, 3, 2]
    nodes = [{"node_id": k, "x": x * 100.0, "y": 0.0} for k, x in enumerate(xs)]
    edges = []
    for k, m in enumerate(hops):
        edges.append({"from": k, "to": k + 1, "length_m": 1000.0, "time_s": m * MIN})
        edges.append({"from": k + 1, "to": k, "length_m": 1000.0, "time_s": m * MIN})
    net = load_network(nodes, edges)
    tables = all_pairs_shortest(net)
    zones = zones_from_rectangles(net, [(0, -1, 350, 1), (350, -1, 550, 1), (550, -1, 700, 1)])
    r1 = Request("r1", 1, 4, 0.0, float(tables.time[1, 4]))
    r2 = Request("r2", 2, 6, 0.0, float(tables.time[2, 6]))
    stops = (
        Stop(1, PICKUP, "r1", 3 * MIN, 1),
        Stop(2, PICKUP, "r2", 5 * MIN, 2),
        Stop(4, DROPOFF, "r1", 9 * MIN, 1),
        Stop(6, DROPOFF, "r2", 14 * MIN, 0),
    )
    sched = Schedule(0, 0.0, stops, float(tables.distance[0, 6]), 14 * MIN)
    return net, tables, zones, (r1, r2), sched


WORKED_ROUTE_SUPPLY = (20 / 15, 15 / 15, 10 / 15)


def two_rider_graph():
    """Two idle vehicles, two requests; edge VMT in metres.

    Solo trips: v1-r1 5 km, v2-r2 7 km (total 12), v1-r2 8 km, v2-r1 9 km.
    Shared trip {r1, r2}: 15 km by v1, 16 km by v2.
    """
    cost = {
        ("v1", ("r1",)): 5, ("v1", ("r2",)): 8, ("v1", ("r1", "r2")): 15,
        ("v2", ("r1",)): 9, ("v2", ("r2",)): 7, ("v2", ("r1", "r2")): 16,
    }
    edges = []
    for v in ("v1", "v2"):
        edges.append(Edge(v, IDLE, "stay"))
        for (vid, trip), km in cost.items():
            if vid == v:
                edges.append(Edge(v, IDLE, "trip", trip=trip, u=km * 1000.0))
    trips = [Trip(("r1",)), Trip(("r2",)), Trip(("r1", "r2"))]
    return RTVZGraph(["v1", "v2"], {"v1": IDLE, "v2": IDLE}, ["r1", "r2"], trips, [], edges, None)
