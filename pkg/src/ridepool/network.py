"""Road network, all-pairs shortest paths and rebalancing zones.

Nodes are addressed internally by their position in ``RoadNetwork.node_ids``;
external ids only appear at the I/O boundary.
"""

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .errors import (
    DanglingEdge,
    Disconnected,
    MalformedRecord,
    NoNodesInBoundingBox,
    NonPositiveWeight,
    Unreachable,
    ValidationError,
)


@dataclass(frozen=True)
class RoadNetwork:
    node_ids: tuple
    xy: np.ndarray  # (N, 2) meters
    edges: tuple  # (from_idx, to_idx, length_m, time_s), parallel edges collapsed

    @cached_property
    def index(self):
        return {nid: i for i, nid in enumerate(self.node_ids)}

    @cached_property
    def edge_map(self):
        return {(u, v): (length, t) for u, v, length, t in self.edges}

    @property
    def n_nodes(self):
        return len(self.node_ids)

    def edge_length(self, u, v):
        return self.edge_map[(u, v)][0]

    def edge_time(self, u, v):
        return self.edge_map[(u, v)][1]

    def nearest_node(self, x, y, candidates=None):
        """Index of the node closest to (x, y); ties go to the lower index."""
        idx = np.arange(self.n_nodes) if candidates is None else np.asarray(candidates)
        d2 = (self.xy[idx, 0] - x) ** 2 + (self.xy[idx, 1] - y) ** 2
        return int(idx[int(np.argmin(d2))])


def _parse_float(value, row_index, name):
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise MalformedRecord(row_index, f"{name}={value!r} is not a number") from None
    if not math.isfinite(out):
        raise MalformedRecord(row_index, f"{name}={value!r} is not finite")
    return out


def _node_key(value):
    """Normalise a node id read from text: integers stay integers."""
    if isinstance(value, str):
        value = value.strip()
        try:
            return int(value)
        except ValueError:
            return value
    return value


def load_network(node_records, edge_records):
    """Build a validated ``RoadNetwork`` from row dicts.

    Node rows carry ``node_id, x, y``; edge rows carry
    ``from, to, length_m, time_s``. When two edges join the same ordered
    pair, the faster one is kept.
    """
    node_ids = []
    coords = []
    seen = set()
    for i, row in enumerate(node_records):
        try:
            nid = _node_key(row["node_id"])
            x, y = row["x"], row["y"]
        except (KeyError, TypeError):
            raise MalformedRecord(i, "node row needs node_id, x, y") from None
        if nid in seen:
            raise MalformedRecord(i, f"duplicate node id {nid!r}")
        seen.add(nid)
        node_ids.append(nid)
        coords.append((_parse_float(x, i, "x"), _parse_float(y, i, "y")))
    if not node_ids:
        raise ValidationError("network has no nodes")
    index = {nid: k for k, nid in enumerate(node_ids)}

    best = {}
    for i, row in enumerate(edge_records):
        try:
            a, b = _node_key(row["from"]), _node_key(row["to"])
            length_raw, time_raw = row["length_m"], row["time_s"]
        except (KeyError, TypeError):
            raise MalformedRecord(i, "edge row needs from, to, length_m, time_s") from None
        for end in (a, b):
            if end not in index:
                raise DanglingEdge(f"edge row {i} references unknown node {end!r}")
        length = _parse_float(length_raw, i, "length_m")
        t = _parse_float(time_raw, i, "time_s")
        if length <= 0 or t <= 0:
            raise NonPositiveWeight(f"edge row {i} ({a!r}->{b!r}) has non-positive weight")
        u, v = index[a], index[b]
        if u == v:
            raise MalformedRecord(i, "self-loop edge")
        if (u, v) not in best or t < best[(u, v)][1]:
            best[(u, v)] = (length, t)

    edges = tuple((u, v, length, t) for (u, v), (length, t) in sorted(best.items()))
    return RoadNetwork(tuple(node_ids), np.array(coords, dtype=float), edges)


def _data_lines(fh):
    return [line for line in fh if not line.startswith("#")]


def read_network_csv(node_path, edge_path):
    """Load node and edge files; lines starting with ``#`` are comments."""
    with open(node_path, newline="") as fh:
        nodes = list(csv.DictReader(_data_lines(fh)))
    with open(edge_path, newline="") as fh:
        edges = list(csv.DictReader(_data_lines(fh)))
    return load_network(nodes, edges)


def write_network_csv(net, node_path, edge_path, header_lines=()):
    with open(node_path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(["node_id", "x", "y"])
        for nid, (x, y) in zip(net.node_ids, net.xy):
            w.writerow([nid, repr(float(x)), repr(float(y))])
    with open(edge_path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(["from", "to", "length_m", "time_s"])
        for u, v, length, t in net.edges:
            w.writerow([net.node_ids[u], net.node_ids[v], repr(length), repr(t)])


@dataclass(frozen=True)
class ShortestPathTables:
    """Dense travel-time / distance matrices over node indices.

    ``distance[i, j]`` is the length of the time-optimal path stored in
    ``predecessor``, so that driving the reconstructed path accrues exactly
    that many meters.
    """

    time: np.ndarray
    distance: np.ndarray
    predecessor: np.ndarray

    @cached_property
    def time_rows(self):
        # nested lists index ~10x faster than numpy scalars in the routing hot loop
        return self.time.tolist()

    @cached_property
    def distance_rows(self):
        return self.distance.tolist()

    @property
    def n_nodes(self):
        return self.time.shape[0]

    def reachable(self, i, j):
        return bool(np.isfinite(self.time[i, j]))

    def require_reachable(self, pairs, node_ids=None):
        """Raise ``Disconnected`` on the first unreachable (i, j) pair."""
        for i, j in pairs:
            if not np.isfinite(self.time[i, j]):
                pair = (node_ids[i], node_ids[j]) if node_ids is not None else (i, j)
                raise Disconnected(pair)


def _distances_along_tree(time, pred, lengths):
    n = time.shape[0]
    dist = np.full((n, n), np.inf)
    for s in range(n):
        order = np.argsort(time[s], kind="stable")
        row = dist[s]
        prow = pred[s]
        row[s] = 0.0
        for j in order:
            p = prow[j]
            if p < 0:
                continue
            row[j] = row[p] + lengths[(p, j)]
    return dist


def all_pairs_shortest(net):
    n = net.n_nodes
    if net.edges:
        src, dst, _, tt = map(np.asarray, zip(*net.edges))
        graph = csr_matrix((tt.astype(float), (src.astype(int), dst.astype(int))), shape=(n, n))
    else:
        graph = csr_matrix((n, n))
    time, pred = shortest_path(graph, method="D", directed=True, return_predecessors=True)
    lengths = {(u, v): length for u, v, length, _ in net.edges}
    dist = _distances_along_tree(time, pred, lengths)
    np.fill_diagonal(time, 0.0)
    return ShortestPathTables(time=time, distance=dist, predecessor=pred.astype(np.int64))


def path_between(tables, i, j):
    """Node sequence of the time-optimal path from ``i`` to ``j``."""
    if i == j:
        return [i]
    if not np.isfinite(tables.time[i, j]):
        raise Unreachable(f"no path from {i} to {j}")
    path = [j]
    prow = tables.predecessor[i]
    node = j
    while node != i:
        node = int(prow[node])
        path.append(node)
    path.reverse()
    return path


@dataclass(frozen=True)
class Zone:
    zone_id: int
    bbox: tuple  # (xmin, ymin, xmax, ymax)
    centroid_node: int


@dataclass(frozen=True)
class ZoneSet:
    zones: tuple
    node_to_zone: np.ndarray  # node index -> position in ``zones``
    cell_size: float = None

    def __len__(self):
        return len(self.zones)

    @cached_property
    def zone_ids(self):
        return [z.zone_id for z in self.zones]

    @cached_property
    def position(self):
        return {z.zone_id: k for k, z in enumerate(self.zones)}

    @cached_property
    def node_zone_list(self):
        return self.node_to_zone.tolist()

    @cached_property
    def members(self):
        out = [[] for _ in self.zones]
        for node, k in enumerate(self.node_zone_list):
            out[k].append(node)
        return out

    def zone_of(self, node):
        """Zone id of a node index."""
        return self.zones[self.node_zone_list[node]].zone_id


def _cell_index(offset, cell_size, n_cells):
    # points on a grid line belong to the lower cell
    k = math.ceil(offset / cell_size) - 1
    return min(max(k, 0), n_cells - 1)


def build_grid_zones(net, cell_size):
    if cell_size <= 0:
        raise ValidationError("cell_size must be positive")
    if net.n_nodes == 0:
        raise NoNodesInBoundingBox("network has no nodes")
    xmin, ymin = net.xy.min(axis=0)
    xmax, ymax = net.xy.max(axis=0)
    ncols = max(math.ceil((xmax - xmin) / cell_size), 1)
    nrows = max(math.ceil((ymax - ymin) / cell_size), 1)

    cell_of = []
    for x, y in net.xy:
        r = _cell_index(y - ymin, cell_size, nrows)
        c = _cell_index(x - xmin, cell_size, ncols)
        cell_of.append((r, c))

    occupied = sorted(set(cell_of))
    cell_to_zone = {cell: k for k, cell in enumerate(occupied)}
    node_to_zone = np.array([cell_to_zone[c] for c in cell_of], dtype=np.int64)
    zones = []
    for k, (r, c) in enumerate(occupied):
        bx0 = xmin + c * cell_size
        by0 = ymin + r * cell_size
        bbox = (bx0, by0, bx0 + cell_size, by0 + cell_size)
        members = np.flatnonzero(node_to_zone == k)
        centroid = net.nearest_node(bx0 + cell_size / 2, by0 + cell_size / 2, members)
        zones.append(Zone(k, bbox, centroid))
    return ZoneSet(tuple(zones), node_to_zone, float(cell_size))


def zones_from_rectangles(net, rectangles):
    """Partition nodes by an explicit rectangle list ``[(xmin, ymin, xmax, ymax), ...]``.

    A node on a shared border goes to the first listing rectangle; nodes
    covered by none are an error. Rectangles that catch no node are dropped.
    """
    assignment = []
    for node, (x, y) in enumerate(net.xy):
        hit = next(
            (k for k, (x0, y0, x1, y1) in enumerate(rectangles) if x0 <= x <= x1 and y0 <= y <= y1),
            None,
        )
        if hit is None:
            raise ValidationError(f"node {net.node_ids[node]!r} lies outside every zone rectangle")
        assignment.append(hit)
    used = sorted(set(assignment))
    remap = {k: pos for pos, k in enumerate(used)}
    node_to_zone = np.array([remap[k] for k in assignment], dtype=np.int64)
    zones = []
    for pos, k in enumerate(used):
        x0, y0, x1, y1 = rectangles[k]
        members = np.flatnonzero(node_to_zone == pos)
        centroid = net.nearest_node((x0 + x1) / 2, (y0 + y1) / 2, members)
        zones.append(Zone(pos, tuple(rectangles[k]), centroid))
    return ZoneSet(tuple(zones), node_to_zone, None)


def check_zone_reach(zones, tables, limit):
    """Node indices not reachable from their zone centroid within ``limit`` seconds."""
    bad = []
    for k, z in enumerate(zones.zones):
        for node in zones.members[k]:
            if tables.time[z.centroid_node, node] > limit:
                bad.append(node)
    return bad
