"""Per-epoch assignment MILP.

Variables are one binary per vehicle edge, one binary per dummy (unserved)
edge, and a pair of continuous deviation variables ``d+ >= 0``, ``d- >= 0``
per balanced zone with ``sum(y x) + d+ - d- = phi``. Rows:

* each vehicle takes exactly one of its edges;
* each outstanding request is covered by exactly one chosen trip or its
  dummy edge;
* the zone balance rows above.

The model is handed to HiGHS (through ``scipy.optimize.milp``) with a zero
relative gap, so returned solutions are proven optimal unless the time
budget runs out.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp
from scipy.sparse import coo_matrix

from .errors import BudgetExceededWithNoIncumbent, ConstraintViolationInSolution, ModelInfeasible

TOL = 1e-6


@dataclass
class AssignmentModel:
    graph: object
    objective: object
    edge_vehicle: np.ndarray  # row index of each vehicle edge
    edge_requests: list  # request row indices covered by each vehicle edge
    request_ids: list
    vehicle_ids: list
    balance_zones: np.ndarray  # zone positions carrying a balance row

    @property
    def n_edges(self):
        return len(self.edge_vehicle)

    @property
    def n_binaries(self):
        return self.n_edges + len(self.request_ids)

    @property
    def n_vars(self):
        return self.n_binaries + 2 * len(self.balance_zones)

    def cost_vector(self):
        obj = self.objective
        c = np.concatenate([
            obj.edge_cost,
            np.full(len(self.request_ids), obj.beta),
            np.repeat(obj.alpha[self.balance_zones], 2) if len(self.balance_zones) else np.zeros(0),
        ])
        return c

    def constraint_matrix(self):
        """Sparse rows (vehicles, requests, zones) with equality right-hand sides."""
        nv, nr, ne = len(self.vehicle_ids), len(self.request_ids), self.n_edges
        rows, cols, vals = [], [], []
        for k, vi in enumerate(self.edge_vehicle):
            rows.append(vi)
            cols.append(k)
            vals.append(1.0)
            for ri in self.edge_requests[k]:
                rows.append(nv + ri)
                cols.append(k)
                vals.append(1.0)
        for ri in range(nr):
            rows.append(nv + ri)
            cols.append(ne + ri)
            vals.append(1.0)
        rhs = [1.0] * (nv + nr)
        Y = self.objective.supply
        base = nv + nr
        for j, zp in enumerate(self.balance_zones):
            col = Y[:, zp]
            for k in np.flatnonzero(col):
                rows.append(base + j)
                cols.append(k)
                vals.append(float(col[k]))
            dplus = self.n_binaries + 2 * j
            rows += [base + j, base + j]
            cols += [dplus, dplus + 1]
            vals += [1.0, -1.0]
            rhs.append(float(self.objective.phi[zp]))
        A = coo_matrix((vals, (rows, cols)), shape=(len(rhs), self.n_vars)).tocsr()
        return A, np.array(rhs)

    def objective_value(self, x_edges, unserved_mask):
        """Objective from first principles for a 0/1 edge choice."""
        obj = self.objective
        val = float(obj.edge_cost @ x_edges) + obj.beta * float(np.sum(unserved_mask))
        if len(self.balance_zones):
            supply = obj.supply[:, self.balance_zones].T @ x_edges
            dev = np.abs(obj.phi[self.balance_zones] - supply)
            val += float(obj.alpha[self.balance_zones] @ dev)
        return val


def build_model(graph, objective):
    vehicle_row = {vid: k for k, vid in enumerate(graph.vehicle_ids)}
    request_row = {rid: k for k, rid in enumerate(graph.request_ids)}
    edge_vehicle = np.array([vehicle_row[e.vehicle_id] for e in graph.edges], dtype=np.int64)
    edge_requests = [[request_row[r] for r in e.trip] if e.kind == "trip" else [] for e in graph.edges]
    if objective.has_balance:
        balance = np.flatnonzero(objective.alpha > 0)
    else:
        balance = np.zeros(0, dtype=np.int64)
    return AssignmentModel(graph, objective, edge_vehicle, edge_requests,
                           list(graph.request_ids), list(graph.vehicle_ids), balance)


@dataclass
class Assignment:
    matches: dict  # vehicle id -> Edge (trip edges only)
    rebalances: dict  # vehicle id -> Edge (zone edges only)
    kept: list  # vehicle ids on their no-op edge
    unserved: list
    objective: float
    optimal: bool = True
    supply: np.ndarray = None  # realised sum(y x) per zone
    deviation: np.ndarray = None  # phi - supply per zone
    chosen: np.ndarray = field(default=None, repr=False)  # edge indices

    def decision(self, vehicle_id):
        if vehicle_id in self.matches:
            return self.matches[vehicle_id]
        return self.rebalances.get(vehicle_id)


def decode(model, raw):
    """Turn a raw solution vector into an ``Assignment``.

    ``raw`` holds at least the ``n_binaries`` edge/dummy values. Row sums are
    checked to ``1e-6``; a violation is an internal fault.
    """
    raw = np.asarray(raw, dtype=float)
    ne, nr = model.n_edges, len(model.request_ids)
    xe = raw[:ne]
    xl = raw[ne:ne + nr]
    if np.any(np.abs(xe - np.round(xe)) > TOL) or np.any(np.abs(xl - np.round(xl)) > TOL):
        raise ConstraintViolationInSolution("fractional binary in solution")
    xe = np.round(xe)
    xl = np.round(xl)
    veh_sum = np.bincount(model.edge_vehicle, weights=xe, minlength=len(model.vehicle_ids))
    bad = np.flatnonzero(np.abs(veh_sum - 1) > TOL)
    if len(bad):
        raise ConstraintViolationInSolution(
            f"vehicle {model.vehicle_ids[bad[0]]} row sums to {veh_sum[bad[0]]:g}")
    cover = xl.copy()
    for k in np.flatnonzero(xe):
        for ri in model.edge_requests[k]:
            cover[ri] += 1
    bad = np.flatnonzero(np.abs(cover - 1) > TOL)
    if len(bad):
        raise ConstraintViolationInSolution(
            f"request {model.request_ids[bad[0]]} covered {cover[bad[0]]:g} times")

    graph = model.graph
    matches, rebalances, kept = {}, {}, []
    chosen = np.flatnonzero(xe)
    for k in chosen:
        e = graph.edges[k]
        if e.kind == "trip":
            matches[e.vehicle_id] = e
        elif e.kind == "zone":
            rebalances[e.vehicle_id] = e
        else:
            kept.append(e.vehicle_id)
    unserved = [model.request_ids[i] for i in np.flatnonzero(xl)]
    supply = deviation = None
    obj = model.objective
    if obj.supply is not None and len(obj.supply):
        supply = obj.supply.T @ xe
        deviation = obj.phi - supply
    value = model.objective_value(xe, xl)
    return Assignment(matches, rebalances, sorted(kept), unserved, value, True, supply, deviation, chosen)


def encode(model, assignment):
    """Inverse of ``decode``: the 0/1 vector over edges and dummies."""
    x = np.zeros(model.n_binaries)
    x[np.asarray(assignment.chosen, dtype=np.int64)] = 1.0
    row = {rid: i for i, rid in enumerate(model.request_ids)}
    for rid in assignment.unserved:
        x[model.n_edges + row[rid]] = 1.0
    return x


def solve_assignment(model, time_budget=10.0):
    """Optimal assignment; ``optimal=False`` if the budget cut the search short."""
    if not model.vehicle_ids and not model.request_ids:
        return Assignment({}, {}, [], [], 0.0, True, None, None, np.zeros(0, dtype=np.int64))
    c = model.cost_vector()
    A, rhs = model.constraint_matrix()
    integrality = np.zeros(model.n_vars)
    integrality[:model.n_binaries] = 1
    upper = np.full(model.n_vars, np.inf)
    upper[:model.n_binaries] = 1.0
    res = milp(
        c,
        integrality=integrality,
        bounds=Bounds(np.zeros(model.n_vars), upper),
        constraints=LinearConstraint(A, rhs, rhs),
        options={"time_limit": float(time_budget), "mip_rel_gap": 0.0, "disp": False},
    )
    if res.x is None:
        if res.status == 1:
            raise BudgetExceededWithNoIncumbent(res.message)
        raise ModelInfeasible(res.message)
    out = decode(model, res.x)
    out.optimal = res.status == 0
    return out


def write_lp(model, fh):
    """Dump the model in CPLEX LP text format."""
    c = model.cost_vector()
    names = [f"x{k}" for k in range(model.n_edges)]
    names += [f"l{k}" for k in range(len(model.request_ids))]
    for j in range(len(model.balance_zones)):
        names += [f"dp{j}", f"dm{j}"]
    A, rhs = model.constraint_matrix()
    fh.write("Minimize\n obj:")
    for name, coef in zip(names, c):
        fh.write(f" + {float(coef)!r} {name}")
    fh.write("\nSubject To\n")
    A = A.tocsr()
    for i in range(A.shape[0]):
        lo, hi = A.indptr[i], A.indptr[i + 1]
        terms = " ".join(f"+ {float(A.data[p])!r} {names[A.indices[p]]}" for p in range(lo, hi))
        fh.write(f" r{i}: {terms} = {float(rhs[i])!r}\n")
    fh.write("Bounds\n")
    for j in range(len(model.balance_zones)):
        fh.write(f" dp{j} >= 0\n dm{j} >= 0\n")
    fh.write("Binary\n")
    for name in names[:model.n_binaries]:
        fh.write(f" {name}\n")
    fh.write("End\n")
