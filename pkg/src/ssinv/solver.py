"""Evaluation and minimization of the long-run average cost F(y, z).

For an order-up-to policy (order to z whenever the level falls to y), the
long-run average cost is

    F(y, z) = (c1(y, z) + g0(z) - g0(y)) / (zeta(z) - zeta(y)),

and the controlled process has stationary density

    pi(x) = 2 kappa m(x) S[y, x]  on [y, z],
            2 kappa m(x) S[y, z]  on [z, b),     kappa = 1 / B zeta.

`minimize_f` locates the global minimizer by multistart Nelder-Mead on a
log-reparameterized domain (position, log-gap), polished by a Newton
solve of the first-order conditions, with an explicit edge search at
y = a when the left boundary is attainable and a "no minimizer" probe
that recognizes infima escaping to the boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize, minimize_scalar
from scipy.stats import qmc

from .characteristics import Characteristics
from .costs import CostModel, ordering_cost
from .errors import ConvergenceError, DomainError
from .funcs import Fn

__all__ = [
    "PiDensity",
    "PolicyEvaluation",
    "SolveReport",
    "SolverConfig",
    "evaluate_policy",
    "policy_cost",
    "first_order_residuals",
    "second_order_value",
    "minimize_f",
]

_BIG = 1e100


@dataclass
class PiDensity:
    """Stationary density of an order-up-to policy, with exact CDF."""

    y: float
    z: float
    kappa: float
    pdf: Fn
    cdf: Fn


@dataclass
class PolicyEvaluation:
    y: float
    z: float
    f: float
    kappa: float
    pi: PiDensity | None


@dataclass
class SolveReport:
    y_star: float
    z_star: float
    f_star: float
    boundary_case: bool
    foc_residual: tuple[float, float]
    soc_value: float | None
    iterations: int
    evaluations: int
    verdict: str  # "minimizer" | "no_minimizer" | "failed"
    multistart: list = field(default_factory=list)
    infimum_trend: float | None = None
    escape_direction: str | None = None
    warnings: list = field(default_factory=list)

    @property
    def found(self) -> bool:
        return self.verdict == "minimizer"


def policy_cost(chars: Characteristics, costs: CostModel, y: float, z: float) -> float:
    """F(y, z) without the stationary-density construction."""
    _check_pair(chars, y, z)
    num = ordering_cost(costs, y, z) + float(chars.g0(z)) - float(chars.g0(y))
    den = float(chars.zeta(z)) - float(chars.zeta(y))
    if den <= 0:
        raise DomainError(f"zeta must increase between y={y} and z={z}")
    return num / den


def _check_pair(chars: Characteristics, y: float, z: float) -> None:
    model = chars.model
    if not y < z:
        raise DomainError(f"policy requires y < z, got y={y}, z={z}")
    if z >= model.right:
        raise DomainError(
            "order-up-to level z must lie strictly below the right boundary: every "
            "(y, b) policy incurs an infinite long-run cost"
        )
    if y < model.left:
        raise DomainError(f"y={y} below the left boundary {model.left}")
    if y == model.left and not chars.left_attainable:
        raise DomainError("y = a is admissible only when the left boundary is attainable")
    chars.require_inside(z, "z")
    if y > model.left:
        chars.require_inside(y, "y")


def evaluate_policy(chars: Characteristics, costs: CostModel, y: float, z: float) -> PolicyEvaluation:
    """Cost, order frequency and stationary density of the (y, z) policy."""
    _check_pair(chars, y, z)
    bzeta = float(chars.zeta(z)) - float(chars.zeta(y))
    kappa = 1.0 / bzeta
    f = policy_cost(chars, costs, y, z)

    pi = None
    app = chars.apparatus
    if app is not None:
        zeta = chars.zeta
        S_yz = float(app.S_between(y, z))

        def pdf(x):
            x = np.asarray(x, dtype=float)
            ramp = 2 * kappa * app.m(x) * app.S_between(y, np.clip(x, y, z))
            tail = 2 * kappa * app.m(x) * S_yz
            return np.where(x <= y, 0.0, np.where(x <= z, ramp, tail))

        def cdf_scalar(x: float) -> float:
            if x <= y:
                return 0.0
            if x <= z:
                above = 2 * kappa * float(app.S_between(y, x)) * float(app.M_tail(x)) + kappa * (
                    float(zeta(z)) - float(zeta(x))
                )
            else:
                above = 2 * kappa * S_yz * float(app.M_tail(x))
            return 1.0 - above

        def cdf(x):
            if np.ndim(x) == 0:
                return cdf_scalar(float(x))
            return np.array([cdf_scalar(float(t)) for t in np.asarray(x).ravel()]).reshape(np.shape(x))

        pi = PiDensity(y=y, z=z, kappa=kappa, pdf=Fn(pdf, name="pi"), cdf=Fn(cdf, name="Pi"))
    return PolicyEvaluation(y=y, z=z, f=f, kappa=kappa, pi=pi)


def _c1_partials(costs: CostModel, y: float, z: float) -> tuple[float, float]:
    """(d c1/d y, d c1/d z) = (-H'(y), H'(z))."""
    return -float(costs.H.derivative_at(y)), float(costs.H.derivative_at(z))


def first_order_residuals(
    chars: Characteristics, costs: CostModel, y: float, z: float, f: float | None = None
) -> tuple[float, float]:
    """Residuals of the first-order conditions at (y, z).

    Each residual is F - (dc1 +- g0') / zeta' at the respective level; both
    vanish at an interior optimum.  At an attainable-boundary optimum
    y = a the first entry is the one-sided slack, which must be >= 0.
    """
    if f is None:
        f = policy_cost(chars, costs, y, z)
    dc1_dy, dc1_dz = _c1_partials(costs, y, z)
    r_y = f - (-dc1_dy + float(chars.g0.derivative_at(y))) / float(chars.zeta.derivative_at(y))
    r_z = f - (dc1_dz + float(chars.g0.derivative_at(z))) / float(chars.zeta.derivative_at(z))
    return (r_y, r_z)


def second_order_value(
    chars: Characteristics, costs: CostModel, y: float, z: float, f: float
) -> float:
    """d2c1/dy2 - g0''(y) + F zeta''(y); nonnegative at an interior optimum."""
    d2c1 = -float(costs.H.second_derivative_at(y))
    return d2c1 - float(chars.g0.second_derivative_at(y)) + f * float(chars.zeta.second_derivative_at(y))


@dataclass(frozen=True)
class SolverConfig:
    multistarts: int = 16
    nm_maxiter: int = 600
    newton_steps: int = 20
    f_rtol: float = 1e-12
    no_minimizer_improvement: float = 0.01
    boundary_scale: float = 1e-6
    search_span: float | None = None  # override half-width of the probe region


def minimize_f(
    chars: Characteristics,
    costs: CostModel,
    config: SolverConfig | None = None,
) -> SolveReport:
    """Global minimization of F over y < z.

    Multistart simplex descent on (position, log-gap) coordinates seeded
    from a coarse grid scan, Newton-polished on the first-order conditions.
    When the left boundary is attainable the edge y = a is searched
    separately and the boundary first-order condition applied.  If probes
    keep improving while approaching an open boundary, the report verdict
    is "no_minimizer" instead.
    """
    cfg = config or SolverConfig()
    model = chars.model
    a, b = model.left, model.right
    lo, hi = _search_window(chars, cfg)
    y_min = max(lo, a)
    if math.isfinite(a):
        # keep the interior search out of the denormal range next to a;
        # the edge y = a itself is searched separately when attainable
        y_min = max(y_min, a + 1e-12 * max(1.0, abs(hi - a)))
    z_max = hi
    evaluations = [0]

    def f_eval(y: float, z: float) -> float:
        evaluations[0] += 1
        y_ok = (y == a and chars.left_attainable) or y >= y_min
        if not (y_ok and y < z <= z_max) or z >= b:
            return _BIG
        try:
            return policy_cost(chars, costs, y, z)
        except (DomainError, FloatingPointError, OverflowError, ValueError):
            return _BIG

    # -- coarse scan ------------------------------------------------------
    grid_y, grid_z = _probe_grids(chars, cfg)
    best = (math.inf, None, None)
    for y in grid_y:
        for z in grid_z:
            if y < z:
                v = f_eval(y, z)
                if v < best[0]:
                    best = (v, y, z)
    if best[1] is None:
        raise ConvergenceError("no feasible (y, z) pair found in the probe region")
    f_g, y_g, z_g = best

    # -- transforms --------------------------------------------------------
    finite_a = math.isfinite(a)

    def to_yz(u: float, v: float) -> tuple[float, float]:
        y = a + math.exp(u) if finite_a else u
        gap = math.exp(v)
        return y, y + gap

    def from_yz(y: float, z: float) -> tuple[float, float]:
        u = math.log(max(y - a, 1e-300)) if finite_a else y
        return u, math.log(max(z - y, 1e-300))

    def objective(t):
        return f_eval(*to_yz(t[0], t[1]))

    u0, v0 = from_yz(y_g, z_g)
    if finite_a:
        u_box = (u0 - 6.0, u0 + 2.0)
    else:
        w = max(abs(z_g - y_g), 0.05 * max(1.0, abs(y_g)))
        u_box = (u0 - 8 * w, u0 + 4 * w)
    v_box = (v0 - 4.0, v0 + 2.5)

    starts = [(u0, v0)]
    sampler = qmc.Halton(d=2, scramble=False)
    pts = sampler.random(max(cfg.multistarts - 1, 0))
    for t1, t2 in pts:
        starts.append((u_box[0] + t1 * (u_box[1] - u_box[0]), v_box[0] + t2 * (v_box[1] - v_box[0])))

    trace = []
    iterations = 0
    best_t, best_f = (u0, v0), f_g
    for st in starts:
        res = minimize(
            objective,
            np.array(st),
            method="Nelder-Mead",
            options={"maxiter": cfg.nm_maxiter, "xatol": 1e-11, "fatol": 1e-13 * (1 + abs(best_f))},
        )
        iterations += res.nit
        trace.append({"start": st, "x": tuple(res.x), "f": float(res.fun), "iterations": int(res.nit)})
        if res.fun < best_f:
            best_f = float(res.fun)
            best_t = (float(res.x[0]), float(res.x[1]))
    y_i, z_i = to_yz(*best_t)

    # -- Newton polish on the first-order conditions ----------------------
    if best_f < _BIG:
        y_i, z_i = _newton_polish(chars, costs, y_i, z_i, cfg, y_min, z_max)
        best_f = f_eval(y_i, z_i)

    # -- edge search at y = a ---------------------------------------------
    boundary_case = False
    if chars.left_attainable and finite_a:
        res = minimize_scalar(
            lambda v: f_eval(a, a + math.exp(v)),
            bounds=v_box,
            method="bounded",
            options={"xatol": 1e-12},
        )
        iterations += res.nfev
        z_e = a + math.exp(float(res.x))
        z_e = _newton_polish_edge(chars, costs, a, z_e, cfg, z_max)
        f_e = f_eval(a, z_e)
        trace.append({"start": "edge", "x": (a, z_e), "f": f_e})
        if f_e <= best_f * (1 + 1e-12):
            best_f, y_i, z_i = f_e, a, z_e
            boundary_case = True

    if best_f >= _BIG:
        return SolveReport(
            y_star=math.nan,
            z_star=math.nan,
            f_star=math.inf,
            boundary_case=False,
            foc_residual=(math.nan, math.nan),
            soc_value=None,
            iterations=iterations,
            evaluations=evaluations[0],
            verdict="failed",
            multistart=trace,
            warnings=["no finite policy cost found"],
        )

    # -- no-minimizer probe -------------------------------------------------
    escape = _escape_probe(chars, costs, f_eval, y_i, z_i, best_f, cfg)
    if escape is not None:
        direction, trend = escape
        return SolveReport(
            y_star=y_i,
            z_star=z_i,
            f_star=best_f,
            boundary_case=boundary_case,
            foc_residual=(math.nan, math.nan),
            soc_value=None,
            iterations=iterations,
            evaluations=evaluations[0],
            verdict="no_minimizer",
            multistart=trace,
            infimum_trend=trend,
            escape_direction=direction,
            warnings=[f"infimum not attained: F keeps improving toward {direction}"],
        )

    foc = first_order_residuals(chars, costs, y_i, z_i, best_f)
    soc = None if boundary_case else second_order_value(chars, costs, y_i, z_i, best_f)
    return SolveReport(
        y_star=y_i,
        z_star=z_i,
        f_star=best_f,
        boundary_case=boundary_case,
        foc_residual=foc,
        soc_value=soc,
        iterations=iterations,
        evaluations=evaluations[0],
        verdict="minimizer",
        multistart=trace,
    )


def _search_window(chars: Characteristics, cfg: SolverConfig) -> tuple[float, float]:
    """Finite window containing the optimum; intersects the tabulated
    domain with a generous default around the anchor."""
    model = chars.model
    lo, hi = chars.domain
    scale = max(1.0, abs(model.anchor))
    span = cfg.search_span if cfg.search_span else 1e3 * scale
    lo_eff = lo if math.isfinite(lo) else model.anchor - span
    hi_eff = hi if math.isfinite(hi) else model.anchor + span
    if math.isfinite(model.left):
        lo_eff = max(lo_eff, model.left)
    return lo_eff, hi_eff


def _probe_grids(chars: Characteristics, cfg: SolverConfig) -> tuple[np.ndarray, np.ndarray]:
    """Coarse scan grids for y and z spanning the whole search window,
    log-clustered around the anchor (and the left boundary when finite)."""
    model = chars.model
    a = model.left
    lo, hi = _search_window(chars, cfg)
    lo = max(lo, a)
    grid = _span_grid(lo, hi, model.anchor, 30)
    if math.isfinite(a):
        near_a = a + np.geomspace(max((hi - a) * 1e-9, 1e-300), (hi - a) * 0.5, 12)
        y_grid = np.unique(np.concatenate([[a] if chars.left_attainable else [], near_a, grid]))
    else:
        y_grid = grid
    return y_grid, grid


def _span_grid(lo: float, hi: float, anchor: float, n: int) -> np.ndarray:
    left = anchor - np.geomspace(max((anchor - lo) * 1e-9, 1e-12), max(anchor - lo, 1e-12), n // 2)[::-1]
    right = anchor + np.geomspace(max((hi - anchor) * 1e-9, 1e-12), max(hi - anchor, 1e-12), n // 2)
    pts = np.concatenate([left, [anchor], right])
    return pts[(pts > lo) & (pts < hi)]


def _newton_polish(chars, costs, y, z, cfg, y_min, z_max):
    """Newton iteration on the first-order conditions with finite-difference
    Jacobian; falls back to the input on failure."""

    def res_vec(t):
        yy, zz = t
        if not (y_min < yy < zz < z_max):
            return None
        try:
            f = policy_cost(chars, costs, yy, zz)
            return np.array(first_order_residuals(chars, costs, yy, zz, f))
        except DomainError:
            return None

    t = np.array([y, z], dtype=float)
    r = res_vec(t)
    if r is None:
        return y, z
    for _ in range(cfg.newton_steps):
        if np.max(np.abs(r)) < 1e-14 * (1 + abs(policy_cost(chars, costs, t[0], t[1]))):
            break
        jac = np.empty((2, 2))
        ok = True
        for j in range(2):
            h = 1e-7 * max(1.0, abs(t[j]))
            tp = t.copy()
            tp[j] += h
            rp = res_vec(tp)
            tm = t.copy()
            tm[j] -= h
            rm = res_vec(tm)
            if rp is None or rm is None:
                ok = False
                break
            jac[:, j] = (rp - rm) / (2 * h)
        if not ok:
            break
        try:
            step = np.linalg.solve(jac, r)
        except np.linalg.LinAlgError:
            break
        t_new = t - step
        r_new = res_vec(t_new)
        if r_new is None or not np.all(np.isfinite(r_new)):
            break
        if np.max(np.abs(r_new)) > 10 * np.max(np.abs(r)):
            break
        t, r = t_new, r_new
    # accept the polish only if it did not increase F
    try:
        if policy_cost(chars, costs, t[0], t[1]) <= policy_cost(chars, costs, y, z) * (1 + 1e-10):
            return float(t[0]), float(t[1])
    except DomainError:
        pass
    return y, z


def _newton_polish_edge(chars, costs, a, z, cfg, z_max):
    """1-D Newton on the z first-order condition with y = a fixed."""

    def res(zz):
        f = policy_cost(chars, costs, a, zz)
        return first_order_residuals(chars, costs, a, zz, f)[1]

    for _ in range(cfg.newton_steps):
        try:
            r = res(z)
            h = 1e-7 * max(1.0, abs(z))
            dr = (res(z + h) - res(z - h)) / (2 * h)
            if dr == 0:
                break
            z_new = z - r / dr
            if not (a < z_new < z_max):
                break
            if abs(res(z_new)) > 10 * abs(r):
                break
            z = z_new
            if abs(r) < 1e-14 * (1 + abs(policy_cost(chars, costs, a, z))):
                break
        except DomainError:
            break
    return z


def _escape_probe(chars, costs, f_eval, y, z, f_best, cfg):
    """Detect an infimum escaping to an open boundary of the policy region:
    march probes toward each boundary; if F keeps improving materially
    while the probe's distance to the boundary shrinks below the boundary
    scale, report the direction.  Probes may leave the search window but
    stay within the characteristics domain."""
    model = chars.model
    a, b = model.left, model.right
    dom_lo, dom_hi = chars.domain
    scale = max(1.0, abs(y), abs(z))

    def probe(yy, zz):
        try:
            return policy_cost(chars, costs, yy, zz)
        except (DomainError, FloatingPointError, OverflowError, ValueError):
            return None

    def march(update, dist_of, start, fixed, toward):
        best = f_best
        improvements = 0
        pk = start
        for _ in range(80):
            pk = update(pk)
            v = probe(pk, fixed) if toward == "left" else probe(fixed, pk)
            if v is None:
                # domain-limited: certify only after substantial improvement
                if improvements >= 3:
                    return best
                return None
            if v < best * (1 - cfg.no_minimizer_improvement):
                best = v
                improvements += 1
            elif v > best:
                return None
            if improvements >= 1 and dist_of(pk) < cfg.boundary_scale * scale:
                return best
        return None

    if not chars.left_attainable:
        if math.isfinite(a):
            res = march(lambda p: a + (p - a) * 0.25, lambda p: p - a, y, z, "left")
        else:
            res = march(lambda p: p - max(abs(p), scale), lambda p: scale / max(abs(p), 1.0), y, z, "left")
        if res is not None:
            return ("left boundary (y -> a)", res)

    if math.isfinite(b):
        res = march(lambda p: b - (b - p) * 0.25, lambda p: b - p, z, y, "right")
    else:
        res = march(lambda p: p * 3.0 if p > 0 else p + 3 * scale, lambda p: scale / max(abs(p), 1.0), z, y, "right")
    if res is not None:
        return ("right boundary (z -> b)", res)
    return None
