"""Newline-delimited event journal: ``time,event_kind,vehicle_id,request_id,node,occupancy``."""

from typing import NamedTuple

HEADER = "time,event_kind,vehicle_id,request_id,node,occupancy"

INIT = "init"
REQUEST = "request"
EXPIRE = "expire"
ASSIGN = "assign"
REBALANCE = "rebalance"
PICKUP = "pickup"
DROPOFF = "dropoff"
IDLE = "idle"
MOVE_ACTIVE = "move_active"
MOVE_DEADHEAD = "move_deadhead"
MOVE_REBALANCE = "move_rebalance"
MOVES = (MOVE_ACTIVE, MOVE_DEADHEAD, MOVE_REBALANCE)


class Event(NamedTuple):
    time: float
    kind: str
    vehicle_id: object = None
    request_id: object = None
    node: object = None
    occupancy: object = None


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return str(int(v)) if v.is_integer() else repr(v)
    return str(v)


def format_event(e):
    return ",".join(_fmt(x) for x in e)


def _parse_value(s, numeric=False):
    if s == "":
        return None
    try:
        return int(s)
    except ValueError:
        if numeric:
            return float(s)
        return s


def parse_event(line):
    t, kind, vid, rid, node, occ = line.rstrip("\n").split(",")
    return Event(float(t), kind, _parse_value(vid), _parse_value(rid), _parse_value(node),
                 _parse_value(occ, numeric=True))


class Journal:
    """Append-only event log, kept in non-decreasing time order per epoch flush."""

    def __init__(self):
        self.events = []
        self._pending = []

    def add(self, time, kind, vehicle_id=None, request_id=None, node=None, occupancy=None):
        self._pending.append(Event(float(time), kind, vehicle_id, request_id, node, occupancy))

    def flush(self):
        # stable sort keeps insertion order among simultaneous events
        self._pending.sort(key=lambda e: e.time)
        self.events.extend(self._pending)
        self._pending = []

    def __iter__(self):
        return iter(self.events)

    def __len__(self):
        return len(self.events)

    def lines(self):
        yield HEADER
        for e in self.events:
            yield format_event(e)

    def text(self):
        return "\n".join(self.lines()) + "\n"

    def write(self, path):
        with open(path, "w") as fh:
            fh.write(self.text())


def read_journal(source):
    """Parse journal text (a path, or an iterable of lines) into events."""
    if isinstance(source, str) and "\n" not in source:
        with open(source) as fh:
            lines = fh.read().splitlines()
    elif isinstance(source, str):
        lines = source.splitlines()
    else:
        lines = list(source)
    out = []
    for line in lines:
        if not line or line.startswith("#") or line.startswith("time,"):
            continue
        out.append(parse_event(line))
    return out
