"""Request streams, historical demand rates and target supply levels."""

import csv
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DuplicateRequest,
    EmptyHistory,
    HorizonTooLong,
    MalformedRecord,
    UnknownNode,
    ValidationError,
)

INTERVAL_LENGTH = 900.0


@dataclass
class Request:
    id: object
    origin: int
    destination: int
    arrival_time: float
    direct_time: float
    pickup_time: float = None
    dropoff_time: float = None

    @property
    def wait(self):
        if self.pickup_time is None:
            return None
        return self.pickup_time - self.arrival_time

    @property
    def delay(self):
        if self.dropoff_time is None:
            return None
        return self.dropoff_time - self.pickup_time - self.direct_time


def _request_key(value):
    if isinstance(value, str):
        value = value.strip()
        try:
            return int(value)
        except ValueError:
            return value
    return value


def _resolve_node(net, row, i, which):
    node_field = f"{which}_node"
    if row.get(node_field) not in (None, ""):
        raw = row[node_field]
        key = int(raw) if isinstance(raw, str) and raw.strip().lstrip("-").isdigit() else raw
        if key not in net.index:
            raise UnknownNode(f"row {i}: {node_field}={raw!r} is not a network node")
        return net.index[key]
    try:
        x = float(row[f"{which}_x"])
        y = float(row[f"{which}_y"])
    except (KeyError, TypeError, ValueError):
        raise MalformedRecord(i, f"needs {node_field} or {which}_x/{which}_y") from None
    return net.nearest_node(x, y)


def load_requests(rows, net, tables):
    """Parse request rows into a list sorted by (arrival time, id).

    Rows carry ``id, time_s`` plus either ``origin_node, dest_node`` or
    coordinates ``origin_x, origin_y, dest_x, dest_y`` which are snapped to
    the nearest network node.
    """
    out = []
    seen = set()
    for i, row in enumerate(rows):
        if "id" not in row or "time_s" not in row:
            raise MalformedRecord(i, "request row needs id and time_s")
        rid = _request_key(row["id"])
        if rid in seen:
            raise DuplicateRequest(f"duplicate request id {rid!r}")
        seen.add(rid)
        try:
            t = float(row["time_s"])
        except (TypeError, ValueError):
            raise MalformedRecord(i, f"time_s={row['time_s']!r} is not a number") from None
        o = _resolve_node(net, row, i, "origin")
        d = _resolve_node(net, row, i, "dest")
        if o == d:
            raise MalformedRecord(i, "origin and destination coincide")
        tau = float(tables.time[o, d])
        if not math.isfinite(tau):
            raise MalformedRecord(i, "destination unreachable from origin")
        out.append(Request(rid, o, d, t, tau))
    out.sort(key=lambda r: (r.arrival_time, str(r.id)))
    return out


def read_requests_csv(path, net, tables):
    with open(path, newline="") as fh:
        rows = [line for line in fh if not line.startswith("#")]
    return load_requests(list(csv.DictReader(rows)), net, tables)


def write_requests_csv(requests, net, path, header_lines=()):
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(["id", "time_s", "origin_node", "dest_node"])
        for r in requests:
            w.writerow([r.id, _fmt(r.arrival_time), net.node_ids[r.origin], net.node_ids[r.destination]])


def _fmt(x):
    x = float(x)
    return str(int(x)) if x.is_integer() else repr(x)


@dataclass(frozen=True)
class RateTable:
    rates: dict  # (zone_id, interval_index) -> requests per interval
    interval_length: float = INTERVAL_LENGTH

    def rate(self, zone_id, k):
        return self.rates.get((zone_id, k), 0.0)

    def zone_rates(self, k, zone_ids):
        return np.array([self.rate(z, k) for z in zone_ids], dtype=float)


def estimate_rates(history, zones, interval_length=INTERVAL_LENGTH):
    """Mean per-day request count by (origin zone, interval).

    ``history`` is a sequence of days, each a list of requests whose
    ``arrival_time`` is measured from that day's start.
    """
    days = list(history)
    if not days:
        raise EmptyHistory("at least one day of history is required")
    totals = defaultdict(float)
    for day in days:
        for r in day:
            k = int(r.arrival_time // interval_length)
            totals[(zones.zone_of(r.origin), k)] += 1.0
    n = float(len(days))
    return RateTable({key: c / n for key, c in sorted(totals.items())}, float(interval_length))


def read_rates_csv(path, interval_length=INTERVAL_LENGTH):
    rates = {}
    with open(path, newline="") as fh:
        rows = [line for line in fh if not line.startswith("#")]
    for i, row in enumerate(csv.DictReader(rows)):
        try:
            key = (int(row["zone_id"]), int(row["interval_index"]))
            lam = float(row["lambda"])
        except (KeyError, TypeError, ValueError):
            raise MalformedRecord(i, "rate row needs zone_id, interval_index, lambda") from None
        if lam < 0 or not math.isfinite(lam):
            raise MalformedRecord(i, "lambda must be finite and non-negative")
        rates[key] = lam
    return RateTable(rates, float(interval_length))


def write_rates_csv(rates, path, header_lines=()):
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(["zone_id", "interval_index", "lambda"])
        for (z, k), lam in sorted(rates.rates.items()):
            w.writerow([z, k, repr(float(lam))])


@dataclass(frozen=True)
class TargetSupply:
    phi: dict  # zone_id -> desired seats over the horizon
    horizon: float
    theta: float = 1.0

    def vector(self, zone_ids):
        return np.array([self.phi.get(z, 0.0) for z in zone_ids], dtype=float)


def overlap_fraction(t, horizon, interval_length):
    """Share of ``[t, t + horizon]`` lying inside the interval containing ``t``."""
    k = math.floor(t / interval_length)
    end_k = (k + 1) * interval_length
    return k, min(max((min(t + horizon, end_k) - t) / horizon, 0.0), 1.0)


def target_supply(rates, t, horizon, zone_ids=None):
    """Blend the rates of the two intervals the window ``[t, t + H]`` touches."""
    if horizon <= 0:
        raise ValidationError("horizon must be positive")
    length = rates.interval_length
    if horizon > 2 * length:
        raise HorizonTooLong(f"H={horizon} spans more than two {length}s demand intervals")
    k, theta = overlap_fraction(t, horizon, length)
    if t + horizon > (k + 2) * length:
        raise HorizonTooLong(f"window [{t}, {t + horizon}] touches three demand intervals")
    if zone_ids is None:
        zone_ids = sorted({z for z, _ in rates.rates})
    phi = {z: theta * rates.rate(z, k) + (1.0 - theta) * rates.rate(z, k + 1) for z in zone_ids}
    return TargetSupply(phi, float(horizon), theta)
