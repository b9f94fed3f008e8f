"""Seeded instance generators for the two applications.

Calcium-trace deconvolution: an unobserved concentration decays by a
factor alpha each step and jumps by a nonnegative spike; observations add
Gaussian noise.  Estimating spikes with a per-spike penalty is exactly the
scalar projected problem, and closed forms for the sequences, linear term,
and constant are used directly.

Hybrid-vehicle path following: a 2-dimensional state tracks a target
trajectory under linear dynamics driven by a 3-dimensional control through
a gain matrix plus a fixed engagement offset; states and controls are
bounded and controls carry a small quadratic cost.  The state part
projects to a block-factorizable problem; the control structure is kept
in a side map so exports can append the coupling rows, bounds, and
optional per-period perspective cones.

Randomness comes from the Philox counter-based 64-bit generator with one
stream per field (key = seed * 2^16 + stream id), so adding a field never
perturbs the others and identical (params, seed) give identical instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .factorizable import FactorizableSpec, check_assumption
from .models import (
    ConicModel,
    LinearRow,
    QuadraticModel,
    RotatedCone,
    SideConstraints,
    Variable,
    build_miqp,
    build_socp,
    x_name,
    z_name,
)
from .projection import MultiPeriodProblem, ProjectedMIQP, project_block, project_scalar

__all__ = [
    "CalciumInstance",
    "HevInstance",
    "HevControlMap",
    "gen_calcium",
    "calcium_projected",
    "calcium_models",
    "gen_hev",
    "hev_projected",
    "hev_models",
]

CALCIUM_VARIANTS = ("relaxed", "original", "capacity")

_STREAMS = {
    "spikes": 1,
    "noise": 2,
    "capacity": 3,
    "state_cost": 4,
    "targets": 5,
    "initial": 6,
    "dynamics": 7,
    "control_matrix": 8,
    "control_offset": 9,
}


def _stream(seed: int, name: str) -> np.random.Generator:
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    return np.random.Generator(np.random.Philox(key=(seed << 16) + _STREAMS[name]))


@dataclass(frozen=True, eq=False)
class CalciumInstance:
    """Synthetic fluorescence trace with known spike times."""

    n: int
    alpha: float
    sigma: float
    mu: float
    lam: float
    beta0: float
    seed: int
    r: np.ndarray            # (n+1,) observed trace
    true_spikes: np.ndarray  # (n,) generating spikes


@dataclass(frozen=True, eq=False)
class HevInstance:
    """Randomized path-following instance (2-dim state, 3-dim control)."""

    n: int
    lam: float
    seed: int
    P: np.ndarray       # (2, 2) state deviation cost
    R: np.ndarray       # (3, 3) control cost
    r: np.ndarray       # (n+1, 2) target trajectory
    b0: np.ndarray      # (2,) initial state
    A: np.ndarray       # (2, 2) dynamics
    G: np.ndarray       # (2, 3) control gain
    k: np.ndarray       # (2,) engagement offset
    s_lo: np.ndarray    # (2,) state bounds
    s_hi: np.ndarray
    y_lo: np.ndarray    # (3,) control bounds
    y_hi: np.ndarray

    state_dim = 2
    control_dim = 3


@dataclass(frozen=True, eq=False)
class HevControlMap:
    """Control-side structure needed to export side constraints."""

    G: np.ndarray
    k: np.ndarray
    R: np.ndarray
    A: np.ndarray
    b0: np.ndarray
    s_lo: np.ndarray
    s_hi: np.ndarray
    y_lo: np.ndarray
    y_hi: np.ndarray


def gen_calcium(n: int, mu: float, sigma: float, alpha: float, lam: float,
                seed: int, beta0: float = 1.0) -> CalciumInstance:
    """Generate a trace: spikes ~ Poisson(mu), noise ~ Normal(0, sigma^2)."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    if sigma < 0.0 or mu < 0.0:
        raise ValueError("sigma and mu must be nonnegative")
    if n < 1:
        raise ValueError("n must be at least 1")
    spikes = _stream(seed, "spikes").poisson(mu, size=n).astype(float)
    noise = _stream(seed, "noise").normal(0.0, sigma, size=n + 1)
    states = np.empty(n + 1)
    states[0] = beta0
    for i in range(n):
        states[i + 1] = alpha * states[i] + spikes[i]
    return CalciumInstance(n=n, alpha=float(alpha), sigma=float(sigma),
                           mu=float(mu), lam=float(lam), beta0=float(beta0),
                           seed=int(seed), r=states + noise, true_spikes=spikes)


def calcium_multiperiod(inst: CalciumInstance) -> MultiPeriodProblem:
    """The generic multi-period problem equivalent to the instance."""
    n = inst.n
    b = np.zeros(n + 1)
    b[0] = inst.beta0
    return MultiPeriodProblem.from_scalar(
        alpha=np.full(n, inst.alpha),
        p=np.full(n + 1, 0.5),
        r=inst.r,
        f=np.zeros(n),
        b=b,
        c=np.full(n, inst.lam),
    )


def calcium_projected(inst: CalciumInstance) -> ProjectedMIQP:
    """Projected form of the deconvolution problem via its closed forms.

    u_i = alpha^(n-i) and v_i = (alpha^(2(n-i+1)) - 1) / (2 alpha^(n-i)
    (alpha^2 - 1)); the half weight on every squared deviation makes
    v_n = 1/2.  Falls back to the generic projection when the power range
    leaves plain float territory.
    """
    n, alpha, beta0 = inst.n, inst.alpha, inst.beta0
    exps = n - 1 - np.arange(n)
    if exps[0] * math.log10(alpha) < -250.0:
        return project_scalar(calcium_multiperiod(inst))
    u = alpha ** exps.astype(float)
    v = (alpha ** (2.0 * (exps + 1)) - 1.0) / (2.0 * u * (alpha ** 2 - 1.0))
    decay = alpha ** np.arange(n + 1, dtype=float)
    resid = decay * beta0 - inst.r
    a = np.array([(alpha ** np.arange(n - i) * resid[i + 1:]).sum() for i in range(n)])
    constant = 0.5 * float(resid @ resid)
    return ProjectedMIQP(spec=FactorizableSpec(u, v), a=a,
                         c=np.full(n, inst.lam), constant=constant)


def _calcium_capacity(inst: CalciumInstance) -> tuple[np.ndarray, float]:
    weights = _stream(inst.seed, "capacity").integers(1, 6, size=inst.n).astype(float)
    return weights, 0.5 * float(weights.sum())


def _calcium_state_chain(inst: CalciumInstance) -> tuple[tuple[Variable, ...], tuple[LinearRow, ...]]:
    """Companion state-trajectory variables tied to x by the dynamics."""
    n = inst.n
    variables = tuple(Variable(f"s[{t}]") for t in range(1, n + 2))
    rows = [LinearRow("init", (("s[1]", 1.0),), "==", inst.beta0)]
    for i in range(1, n + 1):
        rows.append(LinearRow(
            f"dyn[{i}]",
            ((f"s[{i + 1}]", 1.0), (f"s[{i}]", -inst.alpha), (f"x[{i}]", -1.0)),
            "==", 0.0))
    return variables, tuple(rows)


def calcium_models(inst: CalciumInstance, variant: str) -> tuple[ConicModel, QuadraticModel]:
    """Conic and quadratic exports of a deconvolution instance.

    relaxed:  no sign restriction on spikes; conic indicators relaxed.
    original: spike nonnegativity rows x >= 0.
    capacity: additionally one knapsack row g^T z <= h with seeded g.

    The quadratic model carries the state trajectory as companion
    variables (n+1 of them) linked to x by the dynamics rows, matching the
    natural formulation a solver would receive.
    """
    if variant not in CALCIUM_VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {CALCIUM_VARIANTS}")
    m = calcium_projected(inst)
    n = inst.n

    sign_rows = tuple(
        LinearRow(f"xsign[{i}]", ((x_name(i, 1, 1), 1.0),), ">=", 0.0)
        for i in range(1, n + 1))
    rows: tuple[LinearRow, ...] = ()
    if variant in ("original", "capacity"):
        rows = sign_rows
    if variant == "capacity":
        weights, cap = _calcium_capacity(inst)
        rows = rows + (LinearRow(
            "capacity",
            tuple((z_name(i), float(weights[i - 1])) for i in range(1, n + 1)),
            "<=", cap),)

    socp = build_socp(m, side=SideConstraints(rows=rows) if rows else None,
                      relax_binary=(variant == "relaxed"))

    chain_vars, chain_rows = _calcium_state_chain(inst)
    miqp = build_miqp(m, side=SideConstraints(
        variables=chain_vars, rows=chain_rows + rows))
    return socp, miqp


def _round1(arr: np.ndarray) -> np.ndarray:
    return np.round(arr, 1)


def gen_hev(n: int, lam: float, seed: int) -> HevInstance:
    """Randomized path-following instance.

    State cost P = 0.5 B B^T + 0.25 I with standard normal B, control cost
    0.1 I, targets uniform on [-2, 2], initial state uniform on [1, 3],
    dynamics normalized to unit spectral radius, standard normal full-row-
    rank gain, engagement offset uniform on [1, 3]; state bounds [-5, 10],
    control bounds [-2.3, 2.3].  Every random parameter is rounded to one
    decimal place after assembly, which may nudge the spectral radius
    slightly above one; degenerate roundings (singular dynamics, rank-
    deficient gain) are redrawn from the same stream.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    ds, dy = 2, 3
    base = _stream(seed, "state_cost").normal(0.0, 1.0, size=(ds, ds))
    P = _round1(0.5 * base @ base.T + 0.25 * np.eye(ds))
    R = 0.1 * np.eye(dy)
    targets = _round1(_stream(seed, "targets").uniform(-2.0, 2.0, size=(n + 1, ds)))
    b0 = _round1(_stream(seed, "initial").uniform(1.0, 3.0, size=ds))

    dyn_rng = _stream(seed, "dynamics")
    while True:
        raw = dyn_rng.normal(0.0, 1.0, size=(ds, ds))
        radius = float(np.max(np.abs(np.linalg.eigvals(raw))))
        if radius == 0.0:
            continue
        A = _round1(raw / radius)
        if abs(np.linalg.det(A)) > 1e-12:
            break

    gain_rng = _stream(seed, "control_matrix")
    while True:
        G = _round1(gain_rng.normal(0.0, 1.0, size=(ds, dy)))
        if np.linalg.matrix_rank(G) == ds:
            break

    k = _round1(_stream(seed, "control_offset").uniform(1.0, 3.0, size=ds))
    return HevInstance(
        n=int(n), lam=float(lam), seed=int(seed), P=P, R=R, r=targets, b0=b0,
        A=A, G=G, k=k,
        s_lo=np.full(ds, -5.0), s_hi=np.full(ds, 10.0),
        y_lo=np.full(dy, -2.3), y_hi=np.full(dy, 2.3))


def hev_projected(inst: HevInstance) -> tuple[ProjectedMIQP, HevControlMap]:
    """Project the state part of the instance; the control map records the
    structure needed to rebuild the side constraints."""
    n, ds = inst.n, inst.state_dim
    problem = MultiPeriodProblem(
        P=np.tile(inst.P, (n + 1, 1, 1)),
        A=np.tile(inst.A, (n, 1, 1)),
        r=inst.r,
        f=np.zeros((n, ds)),
        b=np.vstack([inst.b0, np.zeros((n, ds))]),
        c=np.full(n, inst.lam),
    )
    m = project_block(problem)
    if not check_assumption(m.spec).passed:
        raise ArithmeticError("projected cost of the path-following instance "
                              "failed its positive definiteness check")
    cmap = HevControlMap(G=inst.G, k=inst.k, R=inst.R, A=inst.A, b0=inst.b0,
                         s_lo=inst.s_lo, s_hi=inst.s_hi,
                         y_lo=inst.y_lo, y_hi=inst.y_hi)
    return m, cmap


def hev_side(inst: HevInstance, cmap: HevControlMap,
             perspective: bool) -> SideConstraints:
    """Control coupling rows, bounds, and optional perspective cones.

    Per period: d_s rows tying x to G y + k z, two-sided control bounds
    scaled by z, and two-sided state bounds on the rolled-out trajectory
    (2 * d_s * (n+1) rows, period-1 rows constant).  With ``perspective``
    each period gains a cone ||R^(1/2) y||^2 <= t z and t joins the
    objective.
    """
    n, ds, dy = inst.n, inst.state_dim, inst.control_dim
    variables = [Variable(f"y[{i},{k}]") for i in range(1, n + 1)
                 for k in range(1, dy + 1)]
    rows: list[LinearRow] = []
    for i in range(1, n + 1):
        for comp in range(ds):
            terms = [(x_name(i, comp + 1, ds), 1.0)]
            terms += [(f"y[{i},{k + 1}]", -float(cmap.G[comp, k])) for k in range(dy)]
            terms.append((z_name(i), -float(cmap.k[comp])))
            rows.append(LinearRow(f"input[{i},{comp + 1}]", tuple(terms), "==", 0.0))
    for i in range(1, n + 1):
        for k in range(dy):
            yv = f"y[{i},{k + 1}]"
            rows.append(LinearRow(f"ybound_hi[{i},{k + 1}]",
                                  ((yv, 1.0), (z_name(i), -float(cmap.y_hi[k]))),
                                  "<=", 0.0))
            rows.append(LinearRow(f"ybound_lo[{i},{k + 1}]",
                                  ((yv, 1.0), (z_name(i), -float(cmap.y_lo[k]))),
                                  ">=", 0.0))

    # rolled-out state bounds: s_t = A^(t-1) b0 + sum_{p<t} A^(t-1-p) x_p
    lead = np.eye(ds)
    coefs: list[np.ndarray] = []  # coefs[p] = coefficient of x_{p+1} in current state
    for t in range(1, n + 2):
        if t > 1:
            lead = cmap.A @ lead
            coefs = [cmap.A @ c for c in coefs]
            coefs.append(np.eye(ds))
        base = lead @ cmap.b0
        for comp in range(ds):
            terms = tuple(
                (x_name(p + 1, kk + 1, ds), float(coefs[p][comp, kk]))
                for p in range(len(coefs)) for kk in range(ds)
                if coefs[p][comp, kk] != 0.0)
            rows.append(LinearRow(f"sbound_hi[{t},{comp + 1}]", terms, "<=",
                                  float(cmap.s_hi[comp] - base[comp])))
            rows.append(LinearRow(f"sbound_lo[{t},{comp + 1}]", terms, ">=",
                                  float(cmap.s_lo[comp] - base[comp])))

    cones: tuple[RotatedCone, ...] = ()
    objective_terms: tuple[tuple[str, float], ...] = ()
    if perspective:
        root = np.linalg.cholesky(cmap.R).T
        pvars, prows, pcones, pterms = [], [], [], []
        for i in range(1, n + 1):
            pvars.append(Variable(f"tp[{i}]", lower=0.0))
            hnames = []
            for comp in range(dy):
                hname = f"hp[{i},{comp + 1}]"
                hnames.append(hname)
                pvars.append(Variable(hname))
                terms = ((hname, 1.0),) + tuple(
                    (f"y[{i},{k + 1}]", -float(root[comp, k])) for k in range(dy)
                    if root[comp, k] != 0.0)
                prows.append(LinearRow(f"pfactor[{i},{comp + 1}]", terms, "==", 0.0))
            pcones.append(RotatedCone(f"pcone[{i}]", t=f"tp[{i}]", w=z_name(i),
                                      h=tuple(hnames)))
            pterms.append((f"tp[{i}]", 1.0))
        variables += pvars
        rows += prows
        cones = tuple(pcones)
        objective_terms = tuple(pterms)

    return SideConstraints(variables=tuple(variables), rows=tuple(rows),
                           cones=cones, objective_terms=objective_terms)


def hev_models(inst: HevInstance, formulation: str):
    """Export a path-following instance.

    'socp'   tight conic model with control coupling and per-period
             perspective cones on the control cost;
    'miqp'   quadratic model over (x, y) with indicators and bounds;
    'miqp-p' quadratic on x only, control cost through perspective cones.
    """
    m, cmap = hev_projected(inst)
    n, ds, dy = inst.n, inst.state_dim, inst.control_dim
    if formulation == "socp":
        return build_socp(m, side=hev_side(inst, cmap, perspective=True))
    if formulation not in ("miqp", "miqp-p"):
        raise ValueError(f"unknown formulation {formulation!r}")
    side = hev_side(inst, cmap, perspective=(formulation == "miqp-p"))
    model = build_miqp(m, side=side)
    if formulation == "miqp":
        ynames = tuple(f"y[{i},{k}]" for i in range(1, n + 1)
                       for k in range(1, dy + 1))
        quad = np.zeros((n * ds + n * dy, n * ds + n * dy))
        quad[:n * ds, :n * ds] = model.quad
        for i in range(n):
            lo = n * ds + i * dy
            quad[lo:lo + dy, lo:lo + dy] = cmap.R
        model = replace(model, quad_vars=model.quad_vars + ynames, quad=quad)
    return model
