"""Command-line entry point: ``ridepool {run,matrix,generate,validate,dump-graph}``.

Exit status is 0 on success, 1 on invalid input and 2 on a runtime fault.
"""

import argparse
import json
import logging
import os
import sys

from .errors import ValidationError
from .harness import expand_matrix, load_config, load_scenario, run_matrix, run_one, sim_config, validate_scenario
from .synthetic import SyntheticSpec, generate_synthetic, write_scenario

log = logging.getLogger("ridepool")


def _overrides(args):
    out = {
        "variant": getattr(args, "variant", None),
        "fleet_size": getattr(args, "fleet", None),
        "seed": getattr(args, "seed", None),
        "gamma": getattr(args, "gamma", None),
        "alpha": getattr(args, "alpha", None),
        "horizon": getattr(args, "h_seconds", None),
    }
    return {k: v for k, v in out.items() if v is not None}


def _add_sim_flags(p):
    p.add_argument("--config", required=True, help="scenario config (YAML or JSON)")
    p.add_argument("--variant")
    p.add_argument("--fleet", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--h-seconds", type=float, dest="h_seconds")


def cmd_run(args):
    doc = load_config(args.config)
    label = args.label or "run"
    cfg, report, _ = run_one(doc, args.out, label, _overrides(args))
    print(json.dumps({"label": label, "variant": cfg.variant, "seed": cfg.seed, **report.row()}, indent=2))
    return 0


def cmd_matrix(args):
    doc = load_config(args.config)
    runs = expand_matrix(doc)
    rows = run_matrix(runs, args.out, args.jobs)
    failed = [r for r in rows if r["status"] != "ok"]
    for r in rows:
        print(f"{r['label']}: {r['status']} {r.get('error', '')}".rstrip())
    print(f"{len(rows) - len(failed)}/{len(rows)} runs succeeded; table at {os.path.join(args.out, 'matrix.csv')}")
    return 0


def _parse_weights(text):
    out = {}
    for part in text.split(","):
        z, w = part.split(":")
        out[int(z)] = float(w)
    return out


def cmd_generate(args):
    if args.config:
        doc = load_config(args.config)
        doc.pop("base_dir", None)
        fields = doc.get("generator", doc)
    else:
        fields = {}
    try:
        spec = SyntheticSpec(**fields)
    except TypeError as exc:
        raise ValidationError(f"generator settings: {exc}") from None
    for name in ("pattern", "rows", "cols", "spacing", "speed", "cell_size", "rate", "duration", "seed"):
        v = getattr(args, name)
        if v is not None:
            setattr(spec, name, v)
    if args.hotspot:
        spec.zone_weights = _parse_weights(args.hotspot)
    if args.origin_zones:
        spec.origin_zones = [int(z) for z in args.origin_zones.split(",")]
    if args.dest_zones:
        spec.dest_zones = [int(z) for z in args.dest_zones.split(",")]
    try:
        sc = generate_synthetic(spec)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    path = write_scenario(sc, args.out)
    print(f"wrote {len(sc.requests)} requests over {sc.net.n_nodes} nodes / {len(sc.zones)} zones; config {path}")
    return 0


def cmd_validate(args):
    doc = load_config(args.config)
    cfg, sc, warnings = validate_scenario(doc, _overrides(args))
    print(f"ok: {sc.net.n_nodes} nodes, {len(sc.net.edges)} edges, {len(sc.zones)} zones, "
          f"{len(sc.requests)} requests, variant {cfg.variant}, fleet {cfg.fleet_size}")
    for w in warnings:
        print(f"warning: {w}")
    return 0


def cmd_dump_graph(args):
    from .simulator import advance_fleet, expire_requests, make_engine, new_state, plan_epoch, step_epoch
    from .assignment import build_model, write_lp
    from .costs import CostParams, assemble_objective

    doc = load_config(args.config)
    cfg = sim_config(doc, _overrides(args))
    sc = load_scenario(doc)
    engine = make_engine(cfg, sc.net, sc.tables, sc.zones, sc.rates)
    state = new_state(engine)
    reqs = sorted(sc.requests, key=lambda r: r.arrival_time)
    i = 0
    # run up to the last epoch before the requested time, then plan without committing
    while state.clock + cfg.epoch < args.time:
        upto = state.clock + cfg.epoch
        batch = []
        while i < len(reqs) and reqs[i].arrival_time <= upto:
            batch.append(reqs[i])
            i += 1
        step_epoch(state, batch)
    now = state.clock + cfg.epoch
    advance_fleet(state, now)
    state.clock = now
    while i < len(reqs) and reqs[i].arrival_time <= now:
        state.outstanding.append(reqs[i])
        i += 1
    expire_requests(state, now)
    graph, phi, result = plan_epoch(state, now)
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        graph.dump(out)
        out.write(f"# objective {result.objective!r} matches {sorted(result.matches)} "
                  f"rebalances {sorted(result.rebalances)} unserved {result.unserved}\n")
    finally:
        if args.out:
            out.close()
    if args.lp:
        params = CostParams(alpha=cfg.alpha if engine.variant.balance else 0.0, beta=cfg.beta,
                            gamma=cfg.gamma_value, horizon=cfg.horizon)
        model = build_model(graph, assemble_objective(graph, phi, params))
        with open(args.lp, "w") as fh:
            write_lp(model, fh)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="ridepool", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate one scenario")
    _add_sim_flags(r)
    r.add_argument("--out", help="directory for the report and journal")
    r.add_argument("--label")
    r.set_defaults(func=cmd_run)

    m = sub.add_parser("matrix", help="run a matrix of scenarios")
    m.add_argument("--config", required=True, help="matrix file")
    m.add_argument("--out", required=True)
    m.add_argument("--jobs", type=int, default=1)
    m.set_defaults(func=cmd_matrix)

    g = sub.add_parser("generate", help="write a synthetic scenario")
    g.add_argument("--config", help="generator settings (YAML or JSON)")
    g.add_argument("--out", required=True)
    g.add_argument("--pattern", choices=("uniform", "hotspot", "commute"))
    g.add_argument("--rows", type=int)
    g.add_argument("--cols", type=int)
    g.add_argument("--spacing", type=float)
    g.add_argument("--speed", type=float)
    g.add_argument("--cell-size", type=float, dest="cell_size")
    g.add_argument("--rate", type=float, help="requests per second")
    g.add_argument("--duration", type=float, help="seconds")
    g.add_argument("--seed", type=int)
    g.add_argument("--hotspot", help="zone:weight,... origin weights")
    g.add_argument("--origin-zones", dest="origin_zones")
    g.add_argument("--dest-zones", dest="dest_zones")
    g.set_defaults(func=cmd_generate)

    v = sub.add_parser("validate", help="lint a scenario config and its inputs")
    _add_sim_flags(v)
    v.set_defaults(func=cmd_validate)

    d = sub.add_parser("dump-graph", help="print the vehicle/trip/zone graph at a given time")
    _add_sim_flags(d)
    d.add_argument("--time", type=float, required=True, help="decision time in seconds")
    d.add_argument("--out")
    d.add_argument("--lp", help="also write the assignment model in LP format")
    d.set_defaults(func=cmd_dump_graph)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        log.debug("fault", exc_info=True)
        print(f"fault: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
