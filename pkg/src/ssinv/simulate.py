"""Monte Carlo simulation of controlled inventory paths.

Euler-Maruyama stepping with instantaneous order jumps, Skorokhod-style
reflection at a reflecting left boundary (projection to the boundary with
the deficit credited to a local-time accumulator), deterministic
counter-based per-path noise streams, and renewal bookkeeping.  The gBM
model steps exactly on the log scale.

Also implements the order-splitting transform for a single oversized gBM
order (defer into a ladder of orders at hits of a reorder level), whose
cumulative cost never exceeds the original order's cost pathwise.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .costs import CostModel
from .errors import DomainError
from .models import GbmParams, gbm_c0_argmin
from .sde import DiffusionModel

__all__ = [
    "OrderUpTo",
    "DelayedTrigger",
    "JustInTime",
    "CustomPolicy",
    "SimConfig",
    "SimulationResult",
    "simulate",
    "stationary_check",
    "SplitThresholds",
    "split_thresholds",
    "order_count_bound",
    "OrderSplitPlan",
    "improve_order",
    "OrderComparison",
    "compare_order_costs",
]


# -- policies ---------------------------------------------------------------


@dataclass(frozen=True)
class OrderUpTo:
    """Order up to z whenever the level falls to y."""

    y: float
    z: float

    def __post_init__(self):
        if not self.y < self.z:
            raise DomainError(f"order-up-to policy requires y < z, got ({self.y}, {self.z})")


@dataclass(frozen=True)
class DelayedTrigger:
    """Order up to ``target`` at hits of ``reorder``, but only after the
    path has first visited ``trigger`` < reorder since the last order."""

    trigger: float
    reorder: float
    target: float

    def __post_init__(self):
        if not self.trigger < self.reorder < self.target:
            raise DomainError(
                f"delayed policy requires trigger < reorder < target, got "
                f"({self.trigger}, {self.reorder}, {self.target})"
            )


@dataclass(frozen=True)
class JustInTime:
    """Never order; rely on reflection (emergency orders) alone."""


@dataclass(frozen=True)
class CustomPolicy:
    """Arbitrary decision callback: decide(t, x, info) -> order-up-to level
    or None; info carries n_orders, last_order_time, min_since_order."""

    decide: object


# -- configuration and results ----------------------------------------------


@dataclass(frozen=True)
class SimConfig:
    seed: int = 20260810
    dt: float = 1e-3
    horizon: float = 200.0
    paths: int = 16
    x0: float | None = None
    burn_in: float = 0.1
    threads: int = 1
    block_steps: int = 32768
    hist_bins: int = 1024
    hist_range: tuple[float, float] | None = None
    backend: str | None = None
    safety: tuple[float, float] | None = None


@dataclass
class SimulationResult:
    avg_cost: float
    stderr: float
    holding_rate: float
    ordering_rate: float
    reflection_rate: float  # k5-weighted cost of reflection per unit time
    local_time_rate: float
    local_time_stderr: float
    order_frequency: float
    order_frequency_stderr: float
    renewal_avg_cost: float | None
    cycle_mean_length: float | None
    cycle_mean_cost: float | None
    n_cycles: int
    hist_edges: np.ndarray
    hist_counts: np.ndarray
    per_path_avg: np.ndarray
    aborted: list
    config: SimConfig

    @property
    def components_sum(self) -> float:
        return self.holding_rate + self.ordering_rate + self.reflection_rate


def _policy_cfg(policy, icfg, fcfg):
    if isinstance(policy, OrderUpTo):
        icfg[kernels.I_POLICY] = 1
        fcfg[kernels.F_TRIG] = policy.y
        fcfg[kernels.F_TARGET] = policy.z
    elif isinstance(policy, DelayedTrigger):
        icfg[kernels.I_POLICY] = 2
        fcfg[kernels.F_TRIG] = policy.reorder
        fcfg[kernels.F_TARGET] = policy.target
        fcfg[kernels.F_ARM] = policy.trigger
    elif isinstance(policy, JustInTime):
        icfg[kernels.I_POLICY] = 0
    else:
        raise DomainError(f"unsupported policy for the kernel route: {policy!r}")


def _model_cfg(model: DiffusionModel, costs: CostModel, cfg: SimConfig):
    icfg = np.zeros(kernels.NICFG, dtype=np.int64)
    fcfg = np.zeros(kernels.NFCFG, dtype=np.float64)
    dt = cfg.dt
    fcfg[kernels.F_DT] = dt
    fcfg[kernels.F_SIG_SQDT] = math.sqrt(dt)
    builtin = model.kind in ("dbm", "reflected_dbm", "gbm")
    if builtin:
        mu = model.params["mu"]
        sigma = model.params["sigma"]
        if model.kind == "gbm":
            icfg[kernels.I_DYN] = 1
            fcfg[kernels.F_DRIFT_DT] = (-mu - 0.5 * sigma * sigma) * dt
        else:
            icfg[kernels.I_DYN] = 0
            fcfg[kernels.F_DRIFT_DT] = -mu * dt
        fcfg[kernels.F_SIG_SQDT] = sigma * math.sqrt(dt)
    icfg[kernels.I_REFLECT] = 1 if model.reflected_left else 0

    if costs.c0_kind == "piecewise_linear":
        icfg[kernels.I_COST] = 0
        fcfg[kernels.F_C0A] = costs.params.get("c_b", costs.params.get("c_h", 1.0))
        fcfg[kernels.F_C0B] = costs.params.get("c_h", 1.0)
    elif costs.c0_kind == "power":
        icfg[kernels.I_COST] = 1
        fcfg[kernels.F_C0A] = costs.params.get("k3", 0.0)
        fcfg[kernels.F_C0B] = costs.params.get("k4", 0.0)
        fcfg[kernels.F_BETA] = costs.params.get("beta", -1.0)
    else:
        builtin = False

    fcfg[kernels.F_K1] = costs.k1
    if costs.H_kind == "linear":
        icfg[kernels.I_H] = 1
        fcfg[kernels.F_K2] = costs.params.get("k2", 0.0)
    elif costs.H_kind == "power":
        icfg[kernels.I_H] = 2
        fcfg[kernels.F_K2] = costs.params.get("k2", 0.0)
        fcfg[kernels.F_ETA] = costs.params.get("eta", 1.0)
    elif costs.H_kind == "zero":
        icfg[kernels.I_H] = 0
    else:
        builtin = False
    fcfg[kernels.F_K5] = costs.params.get("k5", 0.0)
    return icfg, fcfg, builtin


def _default_hist_range(model, policy, cfg) -> tuple[float, float]:
    if isinstance(policy, OrderUpTo):
        lo_anchor, hi_anchor = policy.y, policy.z
    elif isinstance(policy, DelayedTrigger):
        lo_anchor, hi_anchor = 0.0, policy.target
    else:
        lo_anchor, hi_anchor = 0.0, max(1.0, model.anchor)
    if model.kind == "gbm":
        mu, sigma = model.params["mu"], model.params["sigma"]
        alpha = 2 * mu / (sigma * sigma)
        q = 1e5 ** (1.0 / (1.0 + alpha))
        return (max(model.left, 0.0), hi_anchor * q)
    if model.kind in ("dbm", "reflected_dbm"):
        mu, sigma = model.params["mu"], model.params["sigma"]
        rate = 2 * mu / (sigma * sigma)
        return (lo_anchor - 2.0 / rate, hi_anchor + 14.0 / rate)
    width = max(hi_anchor - lo_anchor, 1.0)
    return (lo_anchor - 3 * width, hi_anchor + 10 * width)


def simulate(
    model: DiffusionModel, costs: CostModel, policy, config: SimConfig | None = None
) -> SimulationResult:
    """Simulate N independent controlled paths and estimate the long-run
    average cost, its components, order frequency, cycle statistics and
    the occupancy histogram."""
    cfg = config or SimConfig()
    if cfg.dt <= 0 or cfg.horizon <= 0 or cfg.paths <= 0:
        raise DomainError("dt, horizon and paths must all be positive")
    if isinstance(policy, CustomPolicy):
        return _simulate_custom(model, costs, policy, cfg)

    icfg, fcfg, builtin = _model_cfg(model, costs, cfg)
    _policy_cfg(policy, icfg, fcfg)

    n_steps = int(round(cfg.horizon / cfg.dt))
    icfg[kernels.I_BURN] = int(cfg.burn_in * n_steps)
    icfg[kernels.I_NBINS] = cfg.hist_bins
    hist_range = cfg.hist_range or _default_hist_range(model, policy, cfg)
    fcfg[kernels.F_HIST_LO] = hist_range[0]
    fcfg[kernels.F_HIST_DX] = (hist_range[1] - hist_range[0]) / cfg.hist_bins
    if cfg.safety is not None:
        safe = cfg.safety
    elif model.kind == "gbm":
        safe = (5e-300, 1e12)
    else:
        safe = (-1e7, 1e9)
    fcfg[kernels.F_SAFE_LO] = safe[0]
    fcfg[kernels.F_SAFE_HI] = safe[1]

    if cfg.x0 is not None:
        x0 = cfg.x0
    elif isinstance(policy, OrderUpTo):
        x0 = policy.z
    elif isinstance(policy, DelayedTrigger):
        x0 = policy.target
    else:
        x0 = model.anchor
    model.require_interior(x0, "x0")

    backend = cfg.backend
    hooks = {}
    if not builtin:
        # arbitrary coefficients run through the fallback kernel with
        # callable overrides for the Euler-Maruyama step and cost shapes
        backend = "python"
        dt = cfg.dt
        sqdt = math.sqrt(dt)

        def step_fn(x, z):
            return x + np.asarray(model.drift(x), dtype=float) * dt + np.asarray(
                model.diffusion(x), dtype=float
            ) * sqdt * z

        hooks = {
            "step_fn": step_fn,
            "c0_fn": lambda v: np.asarray(costs.c0(v), dtype=float),
            "h_fn": lambda v: np.asarray(costs.H(v), dtype=float),
        }

    state = np.zeros((cfg.paths, kernels.NSTATE))
    state[:, kernels.X] = x0
    state[:, kernels.TFIRST] = -1.0
    state[:, kernels.ABORT] = -1.0
    hist = np.zeros((cfg.paths, cfg.hist_bins), dtype=np.int64)

    def run_chunk(lo: int, hi: int) -> None:
        gens = [kernels.path_rng(cfg.seed, i) for i in range(lo, hi)]
        s_chunk = state[lo:hi]
        h_chunk = hist[lo:hi]
        step0 = 0
        remaining = n_steps
        while remaining > 0:
            block = min(cfg.block_steps, remaining)
            z = np.empty((hi - lo, block))
            for j, g in enumerate(gens):
                z[j] = g.standard_normal(block)
            if hooks:
                from . import _kernels_py

                _kernels_py.advance(s_chunk, h_chunk, z, step0, icfg, fcfg, **hooks)
            else:
                kernels.advance(s_chunk, h_chunk, z, step0, icfg, fcfg, backend=backend)
            step0 += block
            remaining -= block

    if cfg.threads > 1 and cfg.paths > 1:
        chunks = np.array_split(np.arange(cfg.paths), min(cfg.threads, cfg.paths))
        with ThreadPoolExecutor(max_workers=cfg.threads) as ex:
            list(ex.map(lambda c: run_chunk(int(c[0]), int(c[-1]) + 1), [c for c in chunks if len(c)]))
    else:
        run_chunk(0, cfg.paths)

    return _collect(model, costs, cfg, state, hist, hist_range, n_steps)


def _collect(model, costs, cfg, state, hist, hist_range, n_steps) -> SimulationResult:
    T = n_steps * cfg.dt
    k5 = costs.params.get("k5", 0.0)
    aborted = [int(i) for i in np.nonzero(state[:, kernels.ABORT] >= 0)[0]]
    ok = state[:, kernels.ABORT] < 0
    if not ok.any():
        raise DomainError("all simulated paths aborted (blow-up guard)")
    s = state[ok]
    hold = s[:, kernels.HOLD]
    order = s[:, kernels.ORDER]
    ltime = s[:, kernels.LTIME]
    nord = s[:, kernels.NORD]
    per_path = (hold + order + k5 * ltime) / T
    n = len(per_path)
    stderr = float(np.std(per_path, ddof=1) / math.sqrt(n)) if n > 1 else math.nan
    freq = nord / T
    freq_err = float(np.std(freq, ddof=1) / math.sqrt(n)) if n > 1 else math.nan
    lt_rate = ltime / T
    lt_err = float(np.std(lt_rate, ddof=1) / math.sqrt(n)) if n > 1 else math.nan

    cyc = nord >= 2
    n_cycles = int(np.sum(nord[cyc] - 1))
    if n_cycles > 0:
        tot_len = float(np.sum(s[cyc, kernels.TLAST] - s[cyc, kernels.TFIRST]))
        tot_cost = float(np.sum(s[cyc, kernels.CUMLAST] - s[cyc, kernels.CUMFIRST]))
        mean_len = tot_len / n_cycles
        mean_cost = tot_cost / n_cycles
        renewal = tot_cost / tot_len
    else:
        mean_len = mean_cost = renewal = None

    edges = np.linspace(hist_range[0], hist_range[1], cfg.hist_bins + 1)
    return SimulationResult(
        avg_cost=float(np.mean(per_path)),
        stderr=stderr,
        holding_rate=float(np.mean(hold / T)),
        ordering_rate=float(np.mean(order / T)),
        reflection_rate=float(np.mean(k5 * ltime / T)),
        local_time_rate=float(np.mean(lt_rate)),
        local_time_stderr=lt_err,
        order_frequency=float(np.mean(freq)),
        order_frequency_stderr=freq_err,
        renewal_avg_cost=renewal,
        cycle_mean_length=mean_len,
        cycle_mean_cost=mean_cost,
        n_cycles=n_cycles,
        hist_edges=edges,
        hist_counts=hist[ok].sum(axis=0),
        per_path_avg=per_path,
        aborted=aborted,
        config=cfg,
    )


def _simulate_custom(model, costs, policy: CustomPolicy, cfg: SimConfig) -> SimulationResult:
    """Reference per-step driver for arbitrary decision callbacks."""
    n_steps = int(round(cfg.horizon / cfg.dt))
    dt = cfg.dt
    sqdt = math.sqrt(dt)
    k5 = costs.params.get("k5", 0.0)
    hist_range = cfg.hist_range or _default_hist_range(model, policy, cfg)
    edges = np.linspace(hist_range[0], hist_range[1], cfg.hist_bins + 1)
    counts = np.zeros(cfg.hist_bins, dtype=np.int64)
    burn = int(cfg.burn_in * n_steps)
    x0 = cfg.x0 if cfg.x0 is not None else model.anchor
    state = np.zeros((cfg.paths, kernels.NSTATE))
    logscale = model.kind == "gbm"
    for i in range(cfg.paths):
        g = kernels.path_rng(cfg.seed, i)
        x = x0
        hold = order = ltime = 0.0
        nord = 0
        tfirst = tlast = -1.0
        cumfirst = cumlast = 0.0
        info = {"n_orders": 0, "last_order_time": -1.0, "min_since_order": x0}
        for k in range(n_steps):
            z = float(g.standard_normal())
            if logscale:
                mu, sigma = model.params["mu"], model.params["sigma"]
                x_new = x * math.exp((-mu - 0.5 * sigma**2) * dt + sigma * sqdt * z)
            else:
                x_new = x + float(model.drift(x)) * dt + float(model.diffusion(x)) * sqdt * z
            t = (k + 1) * dt
            if model.reflected_left and x_new < model.left:
                ltime += model.left - x_new
                x_new = model.left
            info["min_since_order"] = min(info["min_since_order"], x_new)
            target = policy.decide(t, x_new, info)
            if target is not None and target > x_new:
                cost = costs.c1(x_new, target)
                cum = hold + order + k5 * ltime
                if nord == 0:
                    tfirst, cumfirst = t, cum
                tlast, cumlast = t, cum
                order += cost
                nord += 1
                x_new = target
                info["n_orders"] = nord
                info["last_order_time"] = t
                info["min_since_order"] = target
            x = x_new
            hold += float(costs.c0(x)) * dt
            if k >= burn:
                b = int((x - hist_range[0]) / (edges[1] - edges[0]))
                counts[min(max(b, 0), cfg.hist_bins - 1)] += 1
        state[i, kernels.X] = x
        state[i, kernels.HOLD] = hold
        state[i, kernels.ORDER] = order
        state[i, kernels.LTIME] = ltime
        state[i, kernels.NORD] = nord
        state[i, kernels.TFIRST] = tfirst
        state[i, kernels.CUMFIRST] = cumfirst
        state[i, kernels.TLAST] = tlast
        state[i, kernels.CUMLAST] = cumlast
        state[i, kernels.ABORT] = -1.0
    hist = np.zeros((cfg.paths, cfg.hist_bins), dtype=np.int64)
    hist[0] = counts
    return _collect(model, costs, cfg, state, hist, hist_range, n_steps)


def stationary_check(result: SimulationResult, cdf) -> float:
    """Sup distance between the empirical occupancy CDF (exact at bin
    edges) and an analytic CDF callable."""
    if hasattr(cdf, "pi") and cdf.pi is not None:  # PolicyEvaluation
        cdf = cdf.pi.cdf
    counts = result.hist_counts
    total = counts.sum()
    if total == 0:
        raise DomainError("no occupancy samples recorded (horizon below burn-in?)")
    emp = np.cumsum(counts) / total
    edges = result.hist_edges[1:]
    worst = 0.0
    for e, v in zip(edges, emp):
        worst = max(worst, abs(float(cdf(float(e))) - float(v)))
    return worst


# ---------------------------------------------------------------------------
# Order-splitting transform (gBM)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SplitThresholds:
    """Ladder geometry for splitting one oversized order.

    ``y`` is the holding-cost minimizer (the reorder level), ``m_bar`` and
    ``m_hat`` the block indices past which the geometric interval family
    covers the half line, and ``L`` the post-order size threshold (on the
    eta-power scale) above which splitting is worthwhile.
    """

    y: float
    z: float
    eta: float
    m_bar: int
    m_hat: int
    L: float

    @property
    def level_threshold(self) -> float:
        """Post-order level above which the transform defers the order."""
        return self.L ** (1.0 / self.eta)


def split_thresholds(p: GbmParams, z: float) -> SplitThresholds:
    """Compute the ladder thresholds for reorder level y = argmin c0 and
    target z > y."""
    if p.k2 <= 0 or p.k3 <= 0 or p.k4 <= 0:
        raise DomainError("order splitting needs k2, k3, k4 > 0")
    y = gbm_c0_argmin(p)
    if not z > y:
        raise DomainError(f"target z={z} must exceed the reorder level y={y}")
    eta = p.eta
    ye, ze = y**eta, z**eta

    def ell(m):
        return ze + (p.k1 / p.k2 + (ze - ye)) * m

    def ell_hat(m):
        return (p.k1 * ze / (p.k2 * (ze - ye)) + ze) * m

    def r(m):
        return ye * (ze / ye) ** (m - 1)

    def cover_from(lfun) -> int:
        last_fail = 0
        m = 1
        good = 0
        while good < 6 and m < 10_000:
            if r(m) < lfun(m) or r(m) < lfun(m + 1):
                last_fail = m
                good = 0
            else:
                good += 1
            m += 1
        return last_fail + 1

    m_bar = cover_from(ell)
    m_hat = cover_from(ell_hat)
    L = max(ell(m_bar), ell_hat(m_hat), ze)
    return SplitThresholds(y=y, z=z, eta=eta, m_bar=m_bar, m_hat=m_hat, L=L)


def order_count_bound(x_post: float, y: float, z: float) -> int:
    """Number of orders used by the split in the no-overshoot limit:
    min{j >= 1 : x_post (y/z)^{j-1} <= z}."""
    j = 1
    level = x_post
    while level > z and j < 100_000:
        level *= y / z
        j += 1
    return j


@dataclass(frozen=True)
class OrderSplitPlan:
    """How the transform handles one order from x_pre up to x_post."""

    case: str  # "pass_through" | "defer" | "order_to_z_then_ladder"
    initial_target: float | None
    reorder: float
    target: float
    m_k: int | None
    thresholds: SplitThresholds


def improve_order(x_pre: float, x_post: float, p: GbmParams, z: float) -> OrderSplitPlan:
    """Decide how to split a single order (x_pre -> x_post).

    Small orders pass through unchanged; oversized orders are deferred
    into a ladder of orders up to min(z, original level) at hits of the
    reorder level y, with an immediate order to z first when the pre-order
    level already sits at or below y.
    """
    if not x_post > x_pre > 0:
        raise DomainError("need 0 < x_pre < x_post")
    th = split_thresholds(p, z)
    if x_post <= th.level_threshold:
        return OrderSplitPlan("pass_through", x_post, th.y, z, None, th)
    m = order_count_bound(x_post, th.y, z)
    if x_pre <= th.y:
        return OrderSplitPlan("order_to_z_then_ladder", z, th.y, z, m, th)
    return OrderSplitPlan("defer", None, th.y, z, m, th)


@dataclass
class OrderComparison:
    min_diff: np.ndarray  # per path, min over grid times of cost(orig) - cost(transformed)
    violations: np.ndarray  # per path, count of level-ordering violations
    orders: np.ndarray  # per path, number of transform orders
    coalesced: np.ndarray  # per path, transform rejoined the original path
    cases: list
    m_k: np.ndarray  # per path, theoretical order-count bound (0 = pass-through)


def compare_order_costs(
    p: GbmParams,
    z: float,
    order_size: float,
    config: SimConfig | None = None,
    tau_steps: int = 0,
    x0: float | None = None,
) -> OrderComparison:
    """Shared-noise pathwise comparison of one oversized order against its
    split ladder.

    Each path evolves freely for ``tau_steps``, receives the original
    order of ``order_size`` units, and is then compared against the
    transformed policy on the same noise for the remaining horizon.
    """
    cfg = config or SimConfig()
    x_start = x0 if x0 is not None else 1.0
    n = cfg.paths
    n_steps = int(round(cfg.horizon / cfg.dt))
    if tau_steps >= n_steps:
        raise DomainError("tau_steps must leave room for the comparison phase")

    mu, sigma = p.mu, p.sigma
    dt = cfg.dt
    fcfg = np.zeros(kernels.NFCFG)
    fcfg[kernels.F_DT] = dt
    fcfg[kernels.F_DRIFT_DT] = (-mu - 0.5 * sigma * sigma) * dt
    fcfg[kernels.F_SIG_SQDT] = sigma * math.sqrt(dt)
    fcfg[kernels.F_C0A] = p.k3
    fcfg[kernels.F_C0B] = p.k4
    fcfg[kernels.F_BETA] = p.beta
    fcfg[kernels.F_K1] = p.k1
    fcfg[kernels.F_K2] = p.k2
    fcfg[kernels.F_ETA] = p.eta
    icfg = np.zeros(kernels.NICFG, dtype=np.int64)

    gens = [kernels.path_rng(cfg.seed, i) for i in range(n)]

    # free evolution to the order time (shared across both processes)
    x_pre = np.full(n, float(x_start))
    drift_dt = fcfg[kernels.F_DRIFT_DT]
    sig_sqdt = fcfg[kernels.F_SIG_SQDT]
    for i in range(n):
        if tau_steps:
            zrow = gens[i].standard_normal(tau_steps)
            x_pre[i] *= math.exp(drift_dt * tau_steps + sig_sqdt * float(np.sum(zrow)))

    def c1(ya, za):
        return p.k1 + p.k2 * (za**p.eta - ya**p.eta)

    cstate = np.zeros((n, kernels.NCSTATE))
    cases = []
    m_theory = np.zeros(n, dtype=np.int64)
    th = split_thresholds(p, z)
    for i in range(n):
        xp = float(x_pre[i])
        xpost = xp + order_size
        plan = improve_order(xp, xpost, p, z)
        cases.append(plan.case)
        cstate[i, kernels.XO] = xpost
        cstate[i, kernels.COSTO] = c1(xp, xpost)
        if plan.case == "pass_through":
            cstate[i, kernels.XT] = xpost
            cstate[i, kernels.COSTT] = c1(xp, xpost)
            cstate[i, kernels.COAL] = 1.0
        elif plan.case == "order_to_z_then_ladder":
            cstate[i, kernels.XT] = z
            cstate[i, kernels.COSTT] = c1(xp, z)
            m_theory[i] = plan.m_k
        else:  # defer
            cstate[i, kernels.XT] = xp
            m_theory[i] = plan.m_k
        cstate[i, kernels.DIFF] = cstate[i, kernels.COSTO] - cstate[i, kernels.COSTT]
        cstate[i, kernels.MINDIFF] = cstate[i, kernels.DIFF]

    fcfg[kernels.F_TRIG] = th.y
    fcfg[kernels.F_TARGET] = z

    remaining = n_steps - tau_steps
    step = 0
    while remaining > 0:
        block = min(cfg.block_steps, remaining)
        zb = np.empty((n, block))
        for i, g in enumerate(gens):
            zb[i] = g.standard_normal(block)
        kernels.compare_advance(cstate, zb, icfg, fcfg, backend=cfg.backend)
        step += block
        remaining -= block

    return OrderComparison(
        min_diff=cstate[:, kernels.MINDIFF].copy(),
        violations=cstate[:, kernels.NVIOL].copy(),
        orders=cstate[:, kernels.NORDT].copy(),
        coalesced=cstate[:, kernels.COAL] > 0.5,
        cases=cases,
        m_k=m_theory,
    )
