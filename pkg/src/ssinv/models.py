"""Closed forms for the three builtin inventory models.

* drifted Brownian motion (dBM) on (-inf, inf): dX = -mu dt + sigma dW,
  piecewise-linear holding/back-order rate, fixed plus proportional
  ordering cost;
* dBM reflected at 0 on [0, inf): holding rate c_h x, reflection charged
  k5 per unit of local time, plus the delayed-trigger and just-in-time
  policy economics;
* geometric Brownian motion (gBM) on (0, inf): dX = -mu X dt + sigma X dW,
  holding rate k3 x + k4 x^beta, ordering cost k1 + k2 (z^eta - y^eta),
  with its special parameter regimes.

Everything here is exact arithmetic; the quadrature pipeline is validated
against these functions in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .characteristics import Characteristics
from .costs import (
    CostModel,
    holding_piecewise_linear,
    holding_power,
    ordering_linear,
    ordering_power,
)
from .errors import DomainError
from .funcs import Fn
from .sde import DiffusionModel

__all__ = [
    "DbmParams",
    "GbmParams",
    "dbm_model",
    "dbm_costs",
    "dbm_characteristics",
    "dbm_xbar",
    "reflected_dbm_optimum",
    "jit_cost",
    "jit_better_than_ss",
    "delayed_policy_cost",
    "delayed_beats_ss",
    "delayed_stationary_pdf",
    "delayed_order_rate",
    "delayed_reflection_rate",
    "jit_stationary_pdf",
    "gbm_model",
    "gbm_costs",
    "gbm_characteristics",
    "gbm_regime",
    "rho_tilde",
    "gbm_h",
    "gbm_h_minimizer",
    "gbm_c0_argmin",
    "closed_form_characteristics",
]


@dataclass(frozen=True)
class DbmParams:
    """Drifted Brownian motion inventory model parameters."""

    mu: float
    sigma: float
    c_h: float
    c_b: float = 0.0
    k1: float = 1.0
    k2: float = 0.0
    reflected: bool = False
    k5: float = 0.0

    def __post_init__(self):
        if self.mu <= 0 or self.sigma <= 0:
            raise DomainError("mu and sigma must be positive")
        if self.c_h <= 0:
            raise DomainError("holding rate c_h must be positive")
        if not self.reflected and self.c_b <= 0:
            raise DomainError("back-order rate c_b must be positive for the unreflected model")
        if self.k1 <= 0:
            raise DomainError("fixed order cost k1 must be positive")
        if self.k2 < 0 or self.k5 < 0:
            raise DomainError("k2 and k5 must be nonnegative")


@dataclass(frozen=True)
class GbmParams:
    """Geometric Brownian motion storage model parameters."""

    mu: float
    sigma: float
    k1: float
    k2: float
    k3: float
    k4: float
    beta: float
    eta: float = 1.0

    def __post_init__(self):
        if self.mu <= 0 or self.sigma <= 0:
            raise DomainError("mu and sigma must be positive")
        if self.k1 <= 0:
            raise DomainError("fixed order cost k1 must be positive")
        if min(self.k2, self.k3, self.k4) < 0:
            raise DomainError("k2, k3, k4 must be nonnegative")
        if self.beta >= 0:
            raise DomainError("beta must be negative")
        if not 0 < self.eta <= 1:
            raise DomainError("eta must lie in (0, 1]")
        if rho_tilde(self.mu, self.sigma, self.beta) <= 0:
            raise DomainError("rho_tilde(beta) must be positive")


# ---------------------------------------------------------------------------
# Drifted Brownian motion
# ---------------------------------------------------------------------------


def dbm_model(p: DbmParams) -> DiffusionModel:
    mu, sigma = p.mu, p.sigma
    if p.reflected:
        return DiffusionModel(
            drift=lambda x: np.full_like(np.asarray(x, dtype=float), -mu),
            diffusion=lambda x: np.full_like(np.asarray(x, dtype=float), sigma),
            left=0.0,
            right=math.inf,
            anchor=max(1.0, math.sqrt(2 * p.k1 * mu / p.c_h)),
            reflected_left=True,
            kind="reflected_dbm",
            params={"mu": mu, "sigma": sigma, "k5": p.k5},
        )
    return DiffusionModel(
        drift=lambda x: np.full_like(np.asarray(x, dtype=float), -mu),
        diffusion=lambda x: np.full_like(np.asarray(x, dtype=float), sigma),
        left=-math.inf,
        right=math.inf,
        anchor=0.0,
        kind="dbm",
        params={"mu": mu, "sigma": sigma},
    )


def dbm_costs(p: DbmParams) -> CostModel:
    if p.reflected:
        c0 = holding_piecewise_linear(c_b=p.c_h, c_h=p.c_h)  # only x >= 0 is reachable
    else:
        c0 = holding_piecewise_linear(c_b=p.c_b, c_h=p.c_h)
    return CostModel(
        c0=c0,
        H=ordering_linear(p.k2),
        k1=p.k1,
        c0_kind="piecewise_linear",
        H_kind="linear",
        params={"c_b": p.c_b, "c_h": p.c_h, "k2": p.k2, "k5": p.k5, "reflected": p.reflected},
    )


class _DbmApparatus:
    """Analytic scale/speed quantities for (reflected) dBM."""

    def __init__(self, mu: float, sigma: float):
        self.mu = mu
        self.sig2 = sigma * sigma
        self.rate = 2 * mu / self.sig2

    def s(self, x):
        return np.exp(self.rate * np.asarray(x, dtype=float))

    def m(self, x):
        return np.exp(-self.rate * np.asarray(x, dtype=float)) / self.sig2

    def S_between(self, y, x):
        r = self.rate
        return (self.sig2 / (2 * self.mu)) * (np.exp(r * np.asarray(x, dtype=float)) - np.exp(r * y))

    def M_tail(self, x):
        return np.exp(-self.rate * np.asarray(x, dtype=float)) / (2 * self.mu)


def dbm_characteristics(p: DbmParams) -> Characteristics:
    """Exact g0 and zeta for the (possibly reflected) dBM model, anchored
    at C = 0."""
    mu, sigma = p.mu, p.sigma
    sig2 = sigma * sigma
    rate = 2 * mu / sig2
    c_h = p.c_h
    c_b = p.c_h if p.reflected else p.c_b
    exp_coef = sig2 * sig2 * (c_b + c_h) / (4 * mu**3)

    def g0_val(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore"):
            neg = -(c_b / (2 * mu)) * x * x - (sig2 * c_b / (2 * mu * mu)) * x + exp_coef * np.expm1(rate * x)
            pos = (c_h / (2 * mu)) * x * x + (sig2 * c_h / (2 * mu * mu)) * x
        return np.where(x < 0, neg, pos)

    def g0_d1(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore"):
            neg = -(c_b / mu) * x - sig2 * c_b / (2 * mu * mu) + (sig2 * (c_b + c_h) / (2 * mu * mu)) * np.exp(rate * x)
            pos = (c_h / mu) * x + sig2 * c_h / (2 * mu * mu)
        return np.where(x < 0, neg, pos)

    def g0_d2(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore"):
            neg = -c_b / mu + ((c_b + c_h) / mu) * np.exp(rate * x)
        pos = np.full_like(x, c_h / mu)
        return np.where(x < 0, neg, pos)

    zeta = Fn(
        lambda x: np.asarray(x, dtype=float) / mu,
        lambda x: np.full_like(np.asarray(x, dtype=float), 1.0 / mu) if np.ndim(x) else 1.0 / mu,
        lambda x: np.zeros_like(np.asarray(x, dtype=float)) if np.ndim(x) else 0.0,
        name="zeta[dbm]",
    )
    g0 = Fn(g0_val, g0_d1, g0_d2, name="g0[dbm]")

    model = dbm_model(p)
    costs = dbm_costs(p)
    domain = (0.0, math.inf) if p.reflected else (-math.inf, math.inf)
    return Characteristics(
        model=model,
        costs=costs,
        g0=g0,
        zeta=zeta,
        anchor=0.0,
        mode="closed-form",
        domain=domain,
        left_attainable=p.reflected,
        apparatus=_DbmApparatus(mu, sigma),
        meta={"params": p},
    )


def dbm_xbar(p: DbmParams) -> float:
    """Location of the minimum of g0' for the classical dBM model; the
    optimal pair straddles it (y* < xbar < z*)."""
    if p.reflected:
        raise DomainError("xbar applies to the unreflected model")
    return (p.sigma**2 / (2 * p.mu)) * math.log(p.c_b / (p.c_b + p.c_h))


def reflected_dbm_optimum(p: DbmParams) -> tuple[float, float, float]:
    """Exact optimal policy (y*, z*, F*) for the reflected dBM model:
    y* = 0, z* = sqrt(2 k1 mu / c_h), F* = sqrt(2 k1 mu c_h) + k2 mu
    + sigma^2 c_h / (2 mu)."""
    if not p.reflected:
        raise DomainError("reflected_dbm_optimum requires reflected=True")
    z_star = math.sqrt(2 * p.k1 * p.mu / p.c_h)
    f_star = math.sqrt(2 * p.k1 * p.mu * p.c_h) + p.k2 * p.mu + p.sigma**2 * p.c_h / (2 * p.mu)
    return 0.0, z_star, f_star


def jit_cost(p: DbmParams) -> float:
    """Long-run average cost of the solely just-in-time policy:
    sigma^2 c_h / (2 mu) + k5 mu."""
    if not p.reflected:
        raise DomainError("jit_cost requires reflected=True")
    return p.sigma**2 * p.c_h / (2 * p.mu) + p.k5 * p.mu


def jit_better_than_ss(p: DbmParams) -> bool:
    """True iff just-in-time beats the optimal order-up-to policy, i.e.
    the emergency premium k5 - k2 is strictly below c_h z*/mu."""
    _, z_star, f_star = reflected_dbm_optimum(p)
    return jit_cost(p) < f_star


def delayed_policy_cost(p: DbmParams, y: float, z: float) -> float:
    """Expected long-run average cost of the delayed (y, z) policy with
    trigger at 0 for reflected dBM.

    The cycle gains an extra reflection phase below y; at y = 0 the
    formula collapses to the standard (0, z) policy cost.
    """
    if not p.reflected:
        raise DomainError("delayed_policy_cost requires reflected=True")
    if not 0 <= y < z:
        raise DomainError(f"need 0 <= y < z, got y={y}, z={z}")
    mu, sig2, c_h, k5 = p.mu, p.sigma**2, p.c_h, p.k5
    e = math.expm1(2 * mu * y / sig2)  # e^{2 mu y / sigma^2} - 1
    c1 = p.k1 + p.k2 * (z - y)
    bg0 = (c_h / (2 * mu)) * (z * z - y * y) + (sig2 * c_h / (2 * mu * mu)) * (z - y)
    bzeta = (z - y) / mu
    num = c1 + bg0 + (sig2 * sig2 * c_h / (4 * mu**3) + sig2 * k5 / (2 * mu)) * e
    den = bzeta + (sig2 / (2 * mu * mu)) * e
    return num / den


@dataclass(frozen=True)
class DelayedComparison:
    """Exact and sufficient-condition comparison of the delayed policy
    against the standard (y, z) policy."""

    f_delayed: float
    f_standard: float
    exact: bool  # f_delayed < f_standard
    sufficient_all_pairs: bool  # k5 < k2 + sqrt(2 k1 c_h / mu)
    improves_at_edge: bool  # k5 < k2

    def __bool__(self) -> bool:
        return self.exact


def delayed_beats_ss(p: DbmParams, y: float, z: float) -> DelayedComparison:
    f_delayed = delayed_policy_cost(p, y, z)
    mu, sig2, c_h = p.mu, p.sigma**2, p.c_h
    c1 = p.k1 + p.k2 * (z - y)
    bg0 = (c_h / (2 * mu)) * (z * z - y * y) + (sig2 * c_h / (2 * mu * mu)) * (z - y)
    f_standard = (c1 + bg0) / ((z - y) / mu)
    return DelayedComparison(
        f_delayed=f_delayed,
        f_standard=f_standard,
        exact=f_delayed < f_standard,
        sufficient_all_pairs=p.k5 < p.k2 + math.sqrt(2 * p.k1 * c_h / mu),
        improves_at_edge=p.k5 < p.k2,
    )


def delayed_stationary_pdf(p: DbmParams, y: float, z: float):
    """Stationary density of the delayed (y, z) policy with trigger 0."""
    mu, sig2 = p.mu, p.sigma**2
    r = 2 * mu / sig2
    alpha1 = 1.0 / ((z - y) / mu + (sig2 / (2 * mu * mu)) * math.expm1(r * y))

    def pdf(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        out = out + np.where((x >= 0) & (x <= y), np.expm1(r * (y - x)) / mu, 0.0)
        out = out + np.where((x >= 0) & (x <= z), -np.expm1(-r * x) / mu, 0.0)
        out = out + np.where(x > z, math.expm1(r * z) * np.exp(-r * x) / mu, 0.0)
        return alpha1 * np.where(x < 0, 0.0, out)

    return pdf


def delayed_order_rate(p: DbmParams, y: float, z: float) -> float:
    """Long-run frequency of y -> z orders under the delayed policy."""
    mu, sig2 = p.mu, p.sigma**2
    return 1.0 / ((z - y) / mu + (sig2 / (2 * mu * mu)) * math.expm1(2 * mu * y / sig2))


def delayed_reflection_rate(p: DbmParams, y: float, z: float) -> float:
    """Long-run rate of local-time accumulation at 0 under the delayed policy."""
    mu, sig2 = p.mu, p.sigma**2
    return delayed_order_rate(p, y, z) * (sig2 / (2 * mu)) * math.expm1(2 * mu * y / sig2)


def jit_stationary_pdf(p: DbmParams):
    """Stationary density of reflected dBM (the solely just-in-time policy)."""
    r = 2 * p.mu / p.sigma**2

    def pdf(x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, 0.0, r * np.exp(-r * x))

    return pdf


# ---------------------------------------------------------------------------
# Geometric Brownian motion
# ---------------------------------------------------------------------------


def rho_tilde(mu: float, sigma: float, beta: float) -> float:
    """rho~(beta) = (sigma^2/2) beta^2 - (mu + sigma^2/2) beta; positive for
    beta < 0."""
    sig2 = sigma * sigma
    return 0.5 * sig2 * beta * beta - (mu + 0.5 * sig2) * beta


def gbm_model(p: GbmParams) -> DiffusionModel:
    mu, sigma = p.mu, p.sigma
    return DiffusionModel(
        drift=lambda x: -mu * np.asarray(x, dtype=float),
        diffusion=lambda x: sigma * np.asarray(x, dtype=float),
        left=0.0,
        right=math.inf,
        anchor=1.0,
        kind="gbm",
        params={"mu": mu, "sigma": sigma},
    )


def gbm_costs(p: GbmParams) -> CostModel:
    H = ordering_power(p.k2, p.eta) if p.k2 > 0 else Fn(
        lambda x: np.zeros_like(np.asarray(x, dtype=float)), lambda x: 0.0, lambda x: 0.0, name="zero"
    )
    return CostModel(
        c0=holding_power(p.k3, p.k4, p.beta),
        H=H,
        k1=p.k1,
        c0_kind="power",
        H_kind="power" if p.k2 > 0 else "zero",
        params={"k2": p.k2, "k3": p.k3, "k4": p.k4, "beta": p.beta, "eta": p.eta},
    )


class _GbmApparatus:
    """Analytic scale/speed quantities for gBM."""

    def __init__(self, mu: float, sigma: float):
        self.mu = mu
        self.sig2 = sigma * sigma
        self.alpha = 2 * mu / self.sig2

    def s(self, x):
        return np.power(np.asarray(x, dtype=float), self.alpha)

    def m(self, x):
        x = np.asarray(x, dtype=float)
        return np.power(x, -2.0 - self.alpha) / self.sig2

    def S_between(self, y, x):
        a1 = 1.0 + self.alpha
        return (np.power(np.asarray(x, dtype=float), a1) - np.power(y, a1)) * self.sig2 / (2 * self.mu + self.sig2)

    def M_tail(self, x):
        return np.power(np.asarray(x, dtype=float), -1.0 - self.alpha) / (2 * self.mu + self.sig2)


def gbm_characteristics(p: GbmParams) -> Characteristics:
    """Exact g0 and zeta for the gBM model, anchored at C = 1."""
    mu = p.mu
    sig2 = p.sigma**2
    rho = rho_tilde(p.mu, p.sigma, p.beta)
    k3, k4, beta = p.k3, p.k4, p.beta
    zc = 2.0 / (2 * mu + sig2)

    def _pow_term(x, coef, expo):
        if coef == 0.0:
            return np.zeros_like(np.asarray(x, dtype=float))
        with np.errstate(over="ignore", divide="ignore"):
            return coef * np.power(np.asarray(x, dtype=float), expo)

    def g0_val(x):
        x = np.asarray(x, dtype=float)
        lin = (k3 / mu) * (x - 1.0) if k3 else np.zeros_like(x)
        return lin - (_pow_term(x, k4 / rho, beta) - (k4 / rho if k4 else 0.0))

    def g0_d1(x):
        return k3 / mu - _pow_term(x, k4 * beta / rho, beta - 1.0)

    def g0_d2(x):
        return -_pow_term(x, k4 * beta * (beta - 1.0) / rho, beta - 2.0)

    def zeta_val(x):
        return zc * np.log(np.asarray(x, dtype=float))

    def zeta_d1(x):
        with np.errstate(divide="ignore"):
            return zc / np.asarray(x, dtype=float)

    def zeta_d2(x):
        with np.errstate(divide="ignore"):
            return -zc / np.square(np.asarray(x, dtype=float))

    zeta = Fn(zeta_val, zeta_d1, zeta_d2, name="zeta[gbm]")
    g0 = Fn(g0_val, g0_d1, g0_d2, name="g0[gbm]")

    return Characteristics(
        model=gbm_model(p),
        costs=gbm_costs(p),
        g0=g0,
        zeta=zeta,
        anchor=1.0,
        mode="closed-form",
        domain=(0.0, math.inf),
        left_attainable=False,
        apparatus=_GbmApparatus(p.mu, p.sigma),
        meta={"params": p},
    )


def gbm_h(p: GbmParams, x):
    """Level function whose equal-value pairs solve the first-order
    conditions: F* = (mu + sigma^2/2) h(y*) = (mu + sigma^2/2) h(z*)."""
    rho = rho_tilde(p.mu, p.sigma, p.beta)
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore", divide="ignore"):
        return (p.k3 / p.mu) * x + p.k2 * p.eta * np.power(x, p.eta) + (p.k4 * (-p.beta) / rho) * np.power(x, p.beta)


def gbm_h_minimizer(p: GbmParams) -> float | None:
    """The unique minimizer of h, i.e. the root of
    (k3/mu) x^{1-beta} + k2 eta^2 x^{eta-beta} = k4 beta^2 / rho~;
    None when h is monotone (degenerate regimes)."""
    rho = rho_tilde(p.mu, p.sigma, p.beta)
    rhs = p.k4 * p.beta * p.beta / rho
    if rhs == 0 or (p.k3 == 0 and p.k2 == 0):
        return None

    def fn(x):
        return (p.k3 / p.mu) * x ** (1 - p.beta) + p.k2 * p.eta**2 * x ** (p.eta - p.beta) - rhs

    lo, hi = 1e-12, 1e12
    flo, fhi = fn(lo), fn(hi)
    if flo * fhi > 0:
        return None
    return float(brentq(fn, lo, hi, xtol=1e-14, rtol=1e-14))


def gbm_c0_argmin(p: GbmParams) -> float:
    """Minimizer of c0(x) = k3 x + k4 x^beta: ((-beta) k4 / k3)^{1/(1-beta)}."""
    if p.k3 <= 0 or p.k4 <= 0:
        raise DomainError("c0 has an interior minimum only when k3, k4 > 0")
    return ((-p.beta) * p.k4 / p.k3) ** (1.0 / (1.0 - p.beta))


def gbm_regime(p: GbmParams) -> str:
    """Parameter regime of the gBM model.

    "standard": optimal (s,S) policy exists via the generic machinery.
    "no_order_optimal": k4 = 0; never ordering is optimal, infimum 0 is
    not attained.
    "no_optimum": k2 = k3 = 0; the infimum 0 is approached by ordering
    ever larger amounts, no optimal policy exists.
    "k3_zero_solvable": k3 = 0 but k2, k4 > 0; the cost conditions fail
    yet a unique optimal (s,S) policy exists.
    """
    if p.k4 == 0:
        return "no_order_optimal"
    if p.k2 == 0 and p.k3 == 0:
        return "no_optimum"
    if p.k3 == 0:
        return "k3_zero_solvable"
    return "standard"


# ---------------------------------------------------------------------------
# Closed-form dispatch used by build_characteristics(mode="auto")
# ---------------------------------------------------------------------------


def closed_form_characteristics(model: DiffusionModel, costs: CostModel) -> Characteristics | None:
    """Return exact characteristics when (model, costs) is a builtin pair."""
    if model.kind in ("dbm", "reflected_dbm") and costs.c0_kind == "piecewise_linear" and costs.H_kind == "linear":
        reflected = model.kind == "reflected_dbm"
        p = DbmParams(
            mu=model.params["mu"],
            sigma=model.params["sigma"],
            c_h=costs.params.get("c_h", 1.0),
            c_b=costs.params.get("c_b", costs.params.get("c_h", 1.0)),
            k1=costs.k1,
            k2=costs.params.get("k2", 0.0),
            reflected=reflected,
            k5=costs.params.get("k5", 0.0),
        )
        return dbm_characteristics(p)
    if model.kind == "gbm" and costs.c0_kind == "power" and costs.H_kind in ("power", "zero"):
        p = GbmParams(
            mu=model.params["mu"],
            sigma=model.params["sigma"],
            k1=costs.k1,
            k2=costs.params.get("k2", 0.0),
            k3=costs.params.get("k3", 0.0),
            k4=costs.params.get("k4", 0.0),
            beta=costs.params.get("beta", -1.0),
            eta=costs.params.get("eta", 1.0),
        )
        return gbm_characteristics(p)
    return None
