"""Scenario configs, single runs and run matrices.

A scenario config is a YAML or JSON mapping::

    network: {nodes: nodes.csv, edges: edges.csv}   # or generator: {...}
    requests: requests.csv
    rates: rates.csv
    interval_length: 900
    zones: {grid: 1200}            # or {rectangles: [[x0, y0, x1, y1], ...]}
    sim: {variant: Integrated, fleet_size: 60, seed: 0, ...}

Relative paths resolve against the config file's directory. When
``generator`` is given instead of file paths, the synthetic scenario is built
in memory.
"""

import copy
import csv
import json
import logging
import os
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import yaml

from .demand import read_rates_csv, read_requests_csv
from .errors import ConfigError, ValidationError
from .network import all_pairs_shortest, build_grid_zones, check_zone_reach, read_network_csv, zones_from_rectangles
from .simulator import SimConfig, run_scenario
from .synthetic import SyntheticSpec, generate_synthetic

log = logging.getLogger(__name__)


def load_config(path):
    with open(path) as fh:
        text = fh.read()
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    doc.setdefault("base_dir", os.path.dirname(os.path.abspath(path)))
    return doc


@dataclass
class LoadedScenario:
    net: object
    tables: object
    zones: object
    rates: object
    requests: list


def _resolve(doc, p):
    return p if os.path.isabs(p) else os.path.join(doc.get("base_dir", "."), p)


def build_zones(doc, net):
    zc = doc.get("zones") or {}
    if "grid" in zc:
        return build_grid_zones(net, float(zc["grid"]))
    if "rectangles" in zc:
        return zones_from_rectangles(net, [tuple(map(float, r)) for r in zc["rectangles"]])
    raise ConfigError("zones must give either grid or rectangles")


def load_scenario(doc):
    """Materialise the network, tables, zones, rates and requests of a config."""
    if "generator" in doc and "network" not in doc:
        try:
            spec = SyntheticSpec(**doc["generator"])
        except TypeError as exc:
            raise ConfigError(f"generator: {exc}") from None
        try:
            sc = generate_synthetic(spec)
        except ValueError as exc:
            raise ConfigError(f"generator: {exc}") from None
        zones = build_zones(doc, sc.net) if "zones" in doc else sc.zones
        return LoadedScenario(sc.net, sc.tables, zones, sc.rates, sc.requests)
    for key in ("network", "requests", "rates"):
        if key not in doc:
            raise ConfigError(f"config is missing {key!r}")
    netc = doc["network"]
    net = read_network_csv(_resolve(doc, netc["nodes"]), _resolve(doc, netc["edges"]))
    tables = all_pairs_shortest(net)
    zones = build_zones(doc, net)
    rates = read_rates_csv(_resolve(doc, doc["rates"]), float(doc.get("interval_length", 900.0)))
    requests = read_requests_csv(_resolve(doc, doc["requests"]), net, tables)
    return LoadedScenario(net, tables, zones, rates, requests)


def sim_config(doc, overrides=None):
    d = dict(doc.get("sim") or {})
    if "interval_length" in doc:
        d.setdefault("interval_length", float(doc["interval_length"]))
    for k, v in (overrides or {}).items():
        if v is not None:
            d[k] = v
    return SimConfig.from_dict(d)


def validate_scenario(doc, overrides=None):
    """Lint a config; returns ``(config, scenario, warnings)`` or raises ValidationError."""
    cfg = sim_config(doc, overrides)
    sc = load_scenario(doc)
    sc.tables.require_reachable([(r.origin, r.destination) for r in sc.requests], sc.net.node_ids)
    warnings = []
    far = check_zone_reach(sc.zones, sc.tables, cfg.omega)
    if far:
        warnings.append(f"{len(far)} nodes are farther than omega from their zone centroid")
    if not sc.requests:
        warnings.append("no requests")
    return cfg, sc, warnings


def run_one(doc, out_dir=None, label="run", overrides=None):
    """Run one scenario; writes ``<label>.json`` and ``<label>.journal.csv`` when ``out_dir`` is set."""
    cfg = sim_config(doc, overrides)
    sc = load_scenario(doc)
    t0 = time.perf_counter()
    report, journal, state = run_scenario(cfg, sc.requests, sc.net, sc.tables, sc.zones, sc.rates)
    elapsed = time.perf_counter() - t0
    echo = {k: v for k, v in doc.items() if k != "base_dir"}
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, f"{label}.json"), "w") as fh:
            fh.write(report.to_json(label=label, config=echo, sim=cfg.to_dict(), seed=cfg.seed,
                                    runtime_s=round(elapsed, 3),
                                    non_optimal_epochs=state.solver_suboptimal,
                                    expiry_rule="min reach time over fleet exceeds wait window"))
            fh.write("\n")
        with open(os.path.join(out_dir, f"{label}.journal.csv"), "w") as fh:
            fh.write("# config " + json.dumps({"sim": cfg.to_dict(), "scenario": echo},
                                             sort_keys=True, default=str) + "\n")
            fh.write(journal.text())
    return cfg, report, journal


def _matrix_worker(args):
    doc, out_dir, label, overrides = args
    try:
        cfg, report, _ = run_one(doc, out_dir, label, overrides)
        return {"label": label, "status": "ok", "error": "", **_echo(cfg), **report.row()}
    except Exception as exc:  # isolate per-run failures
        log.debug("run %s failed:\n%s", label, traceback.format_exc())
        return {"label": label, "status": "failed", "error": f"{type(exc).__name__}: {exc}"}


ECHO_FIELDS = ("variant", "fleet_size", "seed", "alpha", "beta", "gamma", "horizon", "epoch", "omega", "max_delay")


def _echo(cfg):
    out = {k: getattr(cfg, k) for k in ECHO_FIELDS}
    out["gamma"] = cfg.gamma_value
    return out


def expand_matrix(doc):
    """List of ``(scenario doc, label, overrides)`` from a matrix document.

    A matrix gives a ``base`` scenario (inline mapping or path) and either an
    explicit ``runs`` list of ``{label, ...overrides}`` or the product of
    ``variants`` x ``fleets`` x ``seeds``.
    """
    base = doc.get("base")
    if isinstance(base, str):
        base = load_config(_resolve(doc, base))
    elif isinstance(base, dict):
        base = dict(base)
        base.setdefault("base_dir", doc.get("base_dir", "."))
    else:
        raise ConfigError("matrix needs a base scenario")
    runs = []
    if "runs" in doc:
        for item in doc["runs"]:
            item = dict(item)
            label = str(item.pop("label", ""))
            runs.append((base, label, item))
    else:
        variants = doc.get("variants") or [None]
        fleets = doc.get("fleets") or [None]
        seeds = doc.get("seeds") or [None]
        for v in variants:
            for f in fleets:
                for s in seeds:
                    ov = {"variant": v, "fleet_size": f, "seed": s}
                    parts = [str(x) for x in (v, f, s) if x is not None]
                    runs.append((base, "_".join(parts) or "run", ov))
    labels = [r[1] for r in runs]
    if any(not x for x in labels) or len(set(labels)) != len(labels):
        raise ConfigError("matrix labels must be non-empty and unique")
    return runs


def run_matrix(runs, out_dir, jobs=1):
    """Execute runs, isolating failures; writes ``matrix.csv`` and returns its rows."""
    os.makedirs(out_dir, exist_ok=True)
    args = [(copy.deepcopy(doc), out_dir, label, ov) for doc, label, ov in runs]
    if jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_matrix_worker, args))
    else:
        rows = [_matrix_worker(a) for a in args]
    fields = ["label", "status", "error", *ECHO_FIELDS]
    for r in rows:
        for k in r:
            if k not in fields:
                fields.append(k)
    with open(os.path.join(out_dir, "matrix.csv"), "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in fields})
    return rows

