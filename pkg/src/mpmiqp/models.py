"""Solver-agnostic export of the tight conic model and the indicator MIQP.

Two formulations of the projected problem are built here:

* ``build_socp`` emits the extended formulation whose continuous
  relaxation is exact for the unconstrained problem: arc-flow variables w
  over the complete DAG on nodes 0..n+1, one rotated second-order cone
  ``||h_ij||^2 <= t_ij w_ij`` per pair 1 <= i < j <= n+1, the flow and
  indicator-link equalities, an epigraph row t >= sum t_ij, and mixing
  rows sum(F_ij h_ij) = x with F the pair factors of
  :func:`mpmiqp.factorizable.phi_factor`.  Arcs out of the source node
  carry no cone (they have no pair matrix) and appear only in the flow
  and link rows.

* ``build_miqp`` emits the compact model: dense symmetric quadratic cost
  on x, fixed costs on binary z, and indicator records z_i = 0 => x_[i] = 0.
  ``expand_indicators_to_big_m`` rewrites the indicators as big-M rows
  using the stored variable bounds.

Models serialize to a canonical, versioned JSON format
(``mpmiqp-model/1``); see ``model_to_dict`` for the layout.  Writing the
same model twice produces identical bytes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .factorizable import materialize, phi_factor, require_assumption
from .jsonutil import canonical_json_bytes
from .oracle import verify_path_polytope
from .projection import ProjectedMIQP
from .spp import SppSolution

__all__ = [
    "Variable",
    "LinearRow",
    "RotatedCone",
    "Indicator",
    "LinearObjective",
    "ConicModel",
    "QuadraticModel",
    "SideConstraints",
    "HullReport",
    "build_socp",
    "build_miqp",
    "expand_indicators_to_big_m",
    "certify_hull_feasibility",
    "evaluate_model",
    "model_stats",
    "model_to_dict",
    "model_from_dict",
    "write_model",
    "read_model",
]

MODEL_SCHEMA = "mpmiqp-model/1"
SENSES = ("<=", "==", ">=")


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str = "continuous"  # or "binary"
    lower: float | None = None
    upper: float | None = None


@dataclass(frozen=True)
class LinearRow:
    """sum(coef * var) SENSE rhs."""

    name: str
    terms: tuple[tuple[str, float], ...]
    sense: str
    rhs: float


@dataclass(frozen=True)
class RotatedCone:
    """||h||^2 <= t * w with t >= 0, w >= 0."""

    name: str
    t: str
    w: str
    h: tuple[str, ...]


@dataclass(frozen=True)
class Indicator:
    """z = 0 forces every listed variable to zero."""

    z: str
    implied_zero: tuple[str, ...]


@dataclass(frozen=True)
class LinearObjective:
    terms: tuple[tuple[str, float], ...]
    constant: float = 0.0


@dataclass(frozen=True, eq=False)
class ConicModel:
    variables: tuple[Variable, ...]
    objective: LinearObjective
    rows: tuple[LinearRow, ...]
    cones: tuple[RotatedCone, ...]
    meta: dict = field(default_factory=dict)

    kind = "conic"


@dataclass(frozen=True, eq=False)
class QuadraticModel:
    """Quadratic objective x^T quad x over ``quad_vars`` plus linear terms."""

    variables: tuple[Variable, ...]
    quad_vars: tuple[str, ...]
    quad: np.ndarray
    objective: LinearObjective
    rows: tuple[LinearRow, ...]
    indicators: tuple[Indicator, ...]
    cones: tuple[RotatedCone, ...] = ()
    meta: dict = field(default_factory=dict)

    kind = "quadratic"


@dataclass(frozen=True)
class SideConstraints:
    """Extra linear structure appended to an exported model.

    Rows and cones may reference the model's x/z variables and any names
    introduced in ``variables``; ``objective_terms`` add linear cost.
    """

    variables: tuple[Variable, ...] = ()
    rows: tuple[LinearRow, ...] = ()
    cones: tuple[RotatedCone, ...] = ()
    objective_terms: tuple[tuple[str, float], ...] = ()


@dataclass(frozen=True)
class HullReport:
    max_violation: float
    objective_gap: float
    passed: bool


def x_name(i: int, k: int, d: int) -> str:
    return f"x[{i}]" if d == 1 else f"x[{i},{k}]"


def z_name(i: int) -> str:
    return f"z[{i}]"


def _validate_model(model) -> None:
    names = [v.name for v in model.variables]
    name_set = set(names)
    if len(name_set) != len(names):
        raise ValueError("variable names are not unique")
    bounds = {v.name: v for v in model.variables}
    for row in model.rows:
        if row.sense not in SENSES:
            raise ValueError(f"row {row.name}: unknown sense {row.sense!r}")
        for name, coef in row.terms:
            if name not in name_set:
                raise ValueError(f"row {row.name} references unknown variable {name!r}")
            if not math.isfinite(coef):
                raise ValueError(f"row {row.name} has non-finite coefficient")
        if not math.isfinite(row.rhs):
            raise ValueError(f"row {row.name} has non-finite rhs")
    for cone in model.cones:
        for name in (cone.t, cone.w, *cone.h):
            if name not in name_set:
                raise ValueError(f"cone {cone.name} references unknown variable {name!r}")
        for name in (cone.t, cone.w):
            if bounds[name].lower is None or bounds[name].lower < 0.0:
                raise ValueError(
                    f"cone {cone.name}: variable {name!r} must have lower bound 0")
    for name, coef in model.objective.terms:
        if name not in name_set:
            raise ValueError(f"objective references unknown variable {name!r}")
    if isinstance(model, QuadraticModel):
        for name in model.quad_vars:
            if name not in name_set:
                raise ValueError(f"quadratic objective references unknown {name!r}")
        k = len(model.quad_vars)
        if model.quad.shape != (k, k):
            raise ValueError("quadratic matrix shape does not match quad_vars")
        if k and float(np.max(np.abs(model.quad - model.quad.T))) != 0.0:
            raise ValueError("quadratic matrix must be symmetric")
        for ind in model.indicators:
            for name in (ind.z, *ind.implied_zero):
                if name not in name_set:
                    raise ValueError(f"indicator references unknown variable {name!r}")


def build_socp(m: ProjectedMIQP, side: SideConstraints | None = None,
               relax_binary: bool = False) -> ConicModel:
    """Tight conic formulation of the projected problem.

    With ``relax_binary`` the indicators become continuous in [0, 1]
    (exact for the unconstrained problem).  Side constraints contribute
    extra variables, rows, cones, and linear objective terms.
    """
    require_assumption(m.spec)
    n, d, dim = m.n, m.d, m.dim
    variables: list[Variable] = []
    for i in range(n + 1):
        for j in range(i + 1, n + 2):
            variables.append(Variable(f"w[{i},{j}]", lower=0.0))
    variables.append(Variable("t", lower=0.0))
    pairs = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 2)]
    for i, j in pairs:
        variables.append(Variable(f"t[{i},{j}]", lower=0.0))
    for i, j in pairs:
        if d == 1:
            variables.append(Variable(f"h[{i},{j}]"))
        else:
            variables.extend(Variable(f"h[{i},{j},{k}]") for k in range(1, d + 1))
    for i in range(1, n + 1):
        for k in range(1, d + 1):
            variables.append(Variable(x_name(i, k, d)))
    zkind = "continuous" if relax_binary else "binary"
    for i in range(1, n + 1):
        variables.append(Variable(z_name(i), kind=zkind, lower=0.0, upper=1.0))

    rows: list[LinearRow] = []
    for node in range(n + 2):
        terms = [(f"w[{i},{node}]", 1.0) for i in range(node)]
        terms += [(f"w[{node},{j}]", -1.0) for j in range(node + 1, n + 2)]
        rhs = -1.0 if node == 0 else (1.0 if node == n + 1 else 0.0)
        rows.append(LinearRow(f"flow[{node}]", tuple(terms), "==", rhs))
    for i in range(1, n + 1):
        terms = [(z_name(i), 1.0)] + [(f"w[{k},{i}]", -1.0) for k in range(i)]
        rows.append(LinearRow(f"link[{i}]", tuple(terms), "==", 0.0))
    epi = [("t", 1.0)] + [(f"t[{i},{j}]", -1.0) for i, j in pairs]
    rows.append(LinearRow("epi", tuple(epi), ">=", 0.0))

    mix_terms: list[list[tuple[str, float]]] = [[] for _ in range(dim)]
    for i, j in pairs:
        factor = phi_factor(m.spec, i, j)
        touched = [i - 1] if j == n + 1 else [i - 1, j - 1]
        for blk in touched:
            for k in range(d):
                row_idx = blk * d + k
                for col in range(factor.shape[1]):
                    coef = float(factor[row_idx, col])
                    if coef != 0.0:
                        hname = (f"h[{i},{j}]" if d == 1 else f"h[{i},{j},{col + 1}]")
                        mix_terms[row_idx].append((hname, coef))
    for r in range(dim):
        period, comp = r // d + 1, r % d + 1
        terms = tuple(mix_terms[r]) + ((x_name(period, comp, d), -1.0),)
        rows.append(LinearRow(f"mix[{period},{comp}]" if d > 1 else f"mix[{period}]",
                              terms, "==", 0.0))

    cones = tuple(
        RotatedCone(f"cone[{i},{j}]", t=f"t[{i},{j}]", w=f"w[{i},{j}]",
                    h=tuple([f"h[{i},{j}]"] if d == 1 else
                            [f"h[{i},{j},{k}]" for k in range(1, d + 1)]))
        for i, j in pairs)

    obj_terms = [("t", 1.0)]
    obj_terms += [(x_name(r // d + 1, r % d + 1, d), float(m.a[r]))
                  for r in range(dim) if m.a[r] != 0.0]
    obj_terms += [(z_name(i), float(m.c[i - 1])) for i in range(1, n + 1)
                  if m.c[i - 1] != 0.0]

    if side is not None:
        variables.extend(side.variables)
        rows.extend(side.rows)
        cones = cones + side.cones
        obj_terms += list(side.objective_terms)

    model = ConicModel(
        variables=tuple(variables),
        objective=LinearObjective(tuple(obj_terms), constant=m.constant),
        rows=tuple(rows),
        cones=cones,
        meta={"n": n, "d": d, "relaxed_binaries": relax_binary},
    )
    model = replace(model, meta={**model.meta, **model_stats(model)})
    _validate_model(model)
    return model


def build_miqp(m: ProjectedMIQP, side: SideConstraints | None = None,
               x_bound: float | None = None) -> QuadraticModel:
    """Compact indicator MIQP: dense quadratic on x, binaries z.

    ``x_bound`` puts symmetric bounds on every x component (needed before
    a big-M expansion).  Side constraints are appended as in build_socp.
    """
    require_assumption(m.spec)
    n, d, dim = m.n, m.d, m.dim
    xnames = tuple(x_name(r // d + 1, r % d + 1, d) for r in range(dim))
    variables = [Variable(name, lower=None if x_bound is None else -x_bound,
                          upper=None if x_bound is None else x_bound)
                 for name in xnames]
    variables += [Variable(z_name(i), kind="binary", lower=0.0, upper=1.0)
                  for i in range(1, n + 1)]
    obj_terms = [(xnames[r], float(m.a[r])) for r in range(dim) if m.a[r] != 0.0]
    obj_terms += [(z_name(i), float(m.c[i - 1])) for i in range(1, n + 1)
                  if m.c[i - 1] != 0.0]
    indicators = tuple(
        Indicator(z_name(i), tuple(xnames[(i - 1) * d:i * d])) for i in range(1, n + 1))
    rows: tuple[LinearRow, ...] = ()
    cones: tuple[RotatedCone, ...] = ()
    if side is not None:
        variables += list(side.variables)
        rows = side.rows
        cones = side.cones
        obj_terms += list(side.objective_terms)
    model = QuadraticModel(
        variables=tuple(variables),
        quad_vars=xnames,
        quad=materialize(m.spec),
        objective=LinearObjective(tuple(obj_terms), constant=m.constant),
        rows=rows,
        indicators=indicators,
        cones=cones,
        meta={"n": n, "d": d},
    )
    model = replace(model, meta={**model.meta, **model_stats(model)})
    _validate_model(model)
    return model


def expand_indicators_to_big_m(model: QuadraticModel) -> QuadraticModel:
    """Replace indicator records with big-M rows from the variable bounds.

    Every implied-zero variable must carry finite bounds; M is the bound
    magnitude on each side.
    """
    bounds = {v.name: v for v in model.variables}
    rows = list(model.rows)
    for ind in model.indicators:
        for name in ind.implied_zero:
            var = bounds[name]
            if var.lower is None or var.upper is None:
                raise ValueError(
                    f"big-M expansion needs finite bounds on {name!r}")
            rows.append(LinearRow(f"bigM_ub[{name}]",
                                  ((name, 1.0), (ind.z, -var.upper)), "<=", 0.0))
            rows.append(LinearRow(f"bigM_lb[{name}]",
                                  ((name, 1.0), (ind.z, -var.lower)), ">=", 0.0))
    expanded = replace(model, rows=tuple(rows), indicators=())
    expanded = replace(expanded, meta={**expanded.meta, **model_stats(expanded)})
    _validate_model(expanded)
    return expanded


def evaluate_model(model, assignment: dict) -> tuple[float, float]:
    """Maximum constraint violation and objective value at an assignment.

    Checks variable bounds, linear rows, and rotated cones; indicator
    records (quadratic models) are checked as implications.  The objective
    for quadratic models includes the quadratic term.
    """
    def val(name: str) -> float:
        return float(assignment[name])

    worst = 0.0
    for v in model.variables:
        x = val(v.name)
        if v.lower is not None:
            worst = max(worst, v.lower - x)
        if v.upper is not None:
            worst = max(worst, x - v.upper)
    for row in model.rows:
        lhs = sum(coef * val(name) for name, coef in row.terms)
        if row.sense == "==":
            worst = max(worst, abs(lhs - row.rhs))
        elif row.sense == "<=":
            worst = max(worst, lhs - row.rhs)
        else:
            worst = max(worst, row.rhs - lhs)
    for cone in model.cones:
        hh = sum(val(name) ** 2 for name in cone.h)
        worst = max(worst, hh - val(cone.t) * val(cone.w))
    objective = model.objective.constant
    objective += sum(coef * val(name) for name, coef in model.objective.terms)
    if isinstance(model, QuadraticModel):
        xvec = np.array([val(name) for name in model.quad_vars])
        objective += float(xvec @ model.quad @ xvec)
        for ind in model.indicators:
            if val(ind.z) == 0.0:
                worst = max(worst, max(abs(val(name)) for name in ind.implied_zero))
    return worst, float(objective)


def certify_hull_feasibility(model: ConicModel, sol: SppSolution,
                             m: ProjectedMIQP, tol: float = 1e-8) -> HullReport:
    """Check that the exact solver's optimum lifts to a feasible point of
    the conic model with the same objective.

    The lift uses the unique arc flow of the solution's support, splits x
    across the path arcs through the pair factors, and sets each cone
    variable to make its constraint tight.  The model must have been built
    from ``m`` without side constraints.
    """
    n, d, dim = m.n, m.d, m.dim
    assignment: dict[str, float] = {}
    flow, _ = verify_path_polytope(m.spec, sol.z)
    for i in range(n + 1):
        for j in range(i + 1, n + 2):
            assignment[f"w[{i},{j}]"] = float(flow[i, j])
    for r in range(dim):
        assignment[x_name(r // d + 1, r % d + 1, d)] = float(sol.x[r])
    for i in range(1, n + 1):
        assignment[z_name(i)] = float(sol.z[i - 1])

    arcs = {(i, j) for i, j in zip(sol.path, sol.path[1:]) if i >= 1}
    total = 0.0
    for i in range(1, n + 1):
        for j in range(i + 1, n + 2):
            hnames = ([f"h[{i},{j}]"] if d == 1 else
                      [f"h[{i},{j},{k}]" for k in range(1, d + 1)])
            if (i, j) in arcs:
                factor = phi_factor(m.spec, i, j)
                hvec = -0.5 * (factor.T @ m.a)
                tij = float(hvec @ hvec)
                total += tij
                for k, name in enumerate(hnames):
                    assignment[name] = float(hvec[k])
            else:
                tij = 0.0
                for name in hnames:
                    assignment[name] = 0.0
            assignment[f"t[{i},{j}]"] = tij
    q = materialize(m.spec)
    assignment["t"] = max(float(sol.x @ q @ sol.x), total)

    max_violation, objective = evaluate_model(model, assignment)
    gap = abs(objective - sol.objective) / (1.0 + abs(sol.objective))
    return HullReport(max_violation=max_violation, objective_gap=gap,
                      passed=max_violation <= tol and gap <= tol)


def model_stats(model) -> dict:
    """Exact size counts of a built model."""
    return {
        "continuousCount": sum(1 for v in model.variables if v.kind == "continuous"),
        "binaryCount": sum(1 for v in model.variables if v.kind == "binary"),
        "coneCount": len(model.cones),
        "rowCount": len(model.rows),
    }


def _bound(value: float | None):
    return None if value is None else float(value)


def model_to_dict(model) -> dict:
    out = {
        "version": MODEL_SCHEMA,
        "kind": model.kind,
        "variables": [
            {"name": v.name, "kind": v.kind, "lower": _bound(v.lower),
             "upper": _bound(v.upper)} for v in model.variables],
        "objective": {
            "linear": [[name, float(coef)] for name, coef in model.objective.terms],
            "constant": float(model.objective.constant),
        },
        "rows": [
            {"name": r.name, "terms": [[nm, float(cf)] for nm, cf in r.terms],
             "sense": r.sense, "rhs": float(r.rhs)} for r in model.rows],
        "cones": [
            {"name": c.name, "t": c.t, "w": c.w, "h": list(c.h)} for c in model.cones],
        "indicators": [],
        "meta": dict(model.meta),
    }
    if isinstance(model, QuadraticModel):
        out["objective"]["quadratic"] = {
            "vars": list(model.quad_vars),
            "matrix": [[float(x) for x in row] for row in model.quad],
        }
        out["indicators"] = [
            {"z": ind.z, "impliedZero": list(ind.implied_zero)}
            for ind in model.indicators]
    return out


def model_from_dict(data: dict):
    if data.get("version") != MODEL_SCHEMA:
        raise ValueError(f"unsupported model schema {data.get('version')!r}")
    variables = tuple(
        Variable(v["name"], v["kind"], _bound(v["lower"]), _bound(v["upper"]))
        for v in data["variables"])
    rows = tuple(
        LinearRow(r["name"], tuple((nm, float(cf)) for nm, cf in r["terms"]),
                  r["sense"], float(r["rhs"])) for r in data["rows"])
    cones = tuple(
        RotatedCone(c["name"], c["t"], c["w"], tuple(c["h"])) for c in data["cones"])
    objective = LinearObjective(
        tuple((nm, float(cf)) for nm, cf in data["objective"]["linear"]),
        float(data["objective"]["constant"]))
    if data["kind"] == "conic":
        model = ConicModel(variables, objective, rows, cones, dict(data["meta"]))
    elif data["kind"] == "quadratic":
        quad_info = data["objective"]["quadratic"]
        indicators = tuple(
            Indicator(ind["z"], tuple(ind["impliedZero"]))
            for ind in data["indicators"])
        model = QuadraticModel(
            variables, tuple(quad_info["vars"]),
            np.array(quad_info["matrix"], dtype=float), objective, rows,
            indicators, cones, dict(data["meta"]))
    else:
        raise ValueError(f"unknown model kind {data['kind']!r}")
    _validate_model(model)
    return model


def write_model(model, destination, format: str = "json") -> int:
    """Write the model canonically; returns the number of bytes written."""
    if format != "json":
        raise ValueError(f"unsupported format {format!r}")
    _validate_model(model)
    payload = canonical_json_bytes(model_to_dict(model))
    with open(destination, "wb") as fh:
        fh.write(payload)
    return len(payload)


def read_model(source):
    import json

    with open(source, "rb") as fh:
        return model_from_dict(json.loads(fh.read().decode("utf-8")))
