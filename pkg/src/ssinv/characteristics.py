"""The characteristic functions g0 and zeta of an inventory diffusion.

Between an order-up-to level z and a reorder level y, the expected cycle
cost and cycle length of the uncontrolled diffusion are differences of two
increasing functions anchored at C:

    g0(x)   = int_C^x int_u^b 2 c0 dM dS(u)      (expected running cost)
    zeta(x) = 2 int_C^x M[u, b) dS(u)            (expected hitting time)

They satisfy A g0 = -c0 and A zeta = -1.  This module tabulates both on
the scale/speed node ladder (or substitutes closed forms for the builtin
models), exposing them as callables with analytic first derivatives

    g0'(x) = 2 s(x) int_x^b c0 dM,   zeta'(x) = 2 s(x) M[x, b)

and second derivatives obtained from the generator relations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .costs import CostModel
from .errors import AdmissibilityError, DivergenceError, DomainError
from .funcs import Fn
from .sde import (
    BoundaryReport,
    DiffusionModel,
    ScaleSpeedTables,
    build_tables,
    classify_boundaries,
)

__all__ = ["Characteristics", "build_characteristics", "expected_cycle", "import_characteristics"]


@dataclass
class Characteristics:
    """Tabulated or closed-form g0 and zeta with their derivatives."""

    model: DiffusionModel
    costs: CostModel
    g0: Fn
    zeta: Fn
    anchor: float
    mode: str  # "closed-form" | "quadrature" | "imported"
    domain: tuple[float, float]
    left_attainable: bool = False
    apparatus: object | None = None  # scale/speed access for stationary densities
    meta: dict = field(default_factory=dict)

    @property
    def g0_prime(self) -> Callable:
        return self.g0.derivative_at

    @property
    def zeta_prime(self) -> Callable:
        return self.zeta.derivative_at

    def require_inside(self, x: float, what: str = "x") -> None:
        lo, hi = self.domain
        if not (lo <= x <= hi):
            raise DomainError(f"{what}={x} outside characteristics domain [{lo}, {hi}]")

    # -- persistence -----------------------------------------------------

    def export_csv(self, path, n: int = 2001) -> None:
        """Write (x, g0, zeta, g0', zeta') at tabulation nodes."""
        lo, hi = self.domain
        scale = max(1.0, abs(self.anchor))
        if not math.isfinite(lo):
            lo = self.anchor - 1e3 * scale
        if not math.isfinite(hi):
            hi = self.anchor + 1e3 * scale
        if self.mode == "closed-form":
            xs = _export_grid(lo, hi, self.anchor, n)
        else:
            xs = self.meta.get("nodes")
            if xs is None:
                xs = _export_grid(lo, hi, self.anchor, n)
        with open(path, "w") as fh:
            fh.write("x,g0,zeta,g0_prime,zeta_prime\n")
            for x in xs:
                fh.write(
                    "%.17e,%.17e,%.17e,%.17e,%.17e\n"
                    % (
                        x,
                        float(self.g0(x)),
                        float(self.zeta(x)),
                        float(self.g0.derivative_at(x)),
                        float(self.zeta.derivative_at(x)),
                    )
                )


def _export_grid(lo: float, hi: float, anchor: float, n: int) -> np.ndarray:
    parts = [np.array([anchor])]
    if anchor - lo > 0:
        parts.append(anchor - np.geomspace((anchor - lo) * 1e-6, anchor - lo, n // 2))
    if hi - anchor > 0:
        parts.append(anchor + np.geomspace((hi - anchor) * 1e-6, hi - anchor, n // 2))
    return np.unique(np.concatenate(parts))


def import_characteristics(path, model: DiffusionModel, costs: CostModel) -> Characteristics:
    """Rebuild characteristics from an exported CSV table.

    Imported tables support cost evaluation and solving; stationary-density
    queries need the scale/speed apparatus and are unavailable.
    """
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    xs, g0v, zev, g0d, zed = data.T
    order = np.argsort(xs)
    xs, g0v, zev, g0d, zed = (a[order] for a in (xs, g0v, zev, g0d, zed))
    g0_spl = CubicHermiteSpline(xs, g0v, g0d)
    ze_spl = CubicHermiteSpline(xs, zev, zed)
    g0 = Fn(g0_spl, g0_spl.derivative(1), g0_spl.derivative(2), name="g0[imported]")
    zeta = Fn(ze_spl, ze_spl.derivative(1), ze_spl.derivative(2), name="zeta[imported]")
    return Characteristics(
        model=model,
        costs=costs,
        g0=g0,
        zeta=zeta,
        anchor=model.anchor,
        mode="imported",
        domain=(float(xs[0]), float(xs[-1])),
        left_attainable=False,
        apparatus=None,
        meta={"nodes": xs},
    )


class TableApparatus:
    """Scale/speed access backed by ScaleSpeedTables."""

    def __init__(self, tables: ScaleSpeedTables):
        self.tables = tables

    def s(self, x):
        return self.tables.s(x)

    def m(self, x):
        return self.tables.m(x)

    def S_between(self, y, x):
        return self.tables.S_between(y, x)

    def M_tail(self, x):
        return self.tables.M_tail(x)


def build_characteristics(
    model: DiffusionModel,
    costs: CostModel,
    *,
    domain: tuple[float, float] | None = None,
    tables: ScaleSpeedTables | None = None,
    boundary: BoundaryReport | None = None,
    mode: str = "auto",
    allow_inadmissible: bool = False,
) -> Characteristics:
    """Build g0 and zeta for an admissible model.

    ``mode="auto"`` substitutes exact closed forms when the model/cost pair
    is one of the builtin families; ``mode="quadrature"`` forces the
    numerical pipeline (useful to cross-validate the closed forms).
    """
    if mode not in ("auto", "quadrature", "closed-form"):
        raise DomainError(f"unknown characteristics mode {mode!r}")
    if mode != "quadrature":
        closed = _closed_form(model, costs)
        if closed is not None:
            return closed
        if mode == "closed-form":
            raise DomainError("no closed form available for this model/cost pair")

    if tables is None:
        tables = build_tables(model, domain)
    if boundary is None:
        boundary = classify_boundaries(model, tables=tables)
    if not boundary.admissible and not allow_inadmissible:
        boundary.require_admissible()

    right = tables.right_side
    left = tables.left_side
    nr = right.n_domain
    nl = left.n_domain

    ln_gap_q_r = right.ln_gap_cost(costs.c0)
    q_total = right._block_verdict(ln_gap_q_r)
    if q_total.status == "divergent":
        raise DivergenceError(
            "int_x^b c0 dM diverges: the holding cost is not speed-integrable toward "
            "the right boundary, so g0 is undefined"
        )
    ln_q_right_total = math.log(max(q_total.value, 5e-324))

    rev = np.concatenate([[-math.inf], ln_gap_q_r[::-1]])
    ln_q_tail_r = np.logaddexp.accumulate(rev)[::-1][:nr]

    ln_gap_q_l = left.ln_gap_cost(costs.c0)
    ln_q_cum_l = np.concatenate([[-math.inf], np.logaddexp.accumulate(ln_gap_q_l)])[:nl]
    ln_q_tail_l = np.logaddexp(ln_q_cum_l, ln_q_right_total)

    ln_m_tail_r = tables._ln_Mtail_r_nodes
    ln_m_tail_l = np.logaddexp(left.ln_M_cum[:nl], tables._ln_M_right_total)
    if not np.all(np.isfinite(ln_m_tail_r)):
        raise DivergenceError("speed measure M[x, b) is infinite; model violates finiteness")

    def side_nodes(side, n, ln_m_tail, ln_q_tail):
        xs = side.x[:n]
        psi = side.psi[:n]
        with np.errstate(over="ignore", under="ignore"):
            p = np.exp(-psi + ln_m_tail)
            q = np.exp(-psi + ln_q_tail)
        sig2 = side.sig2_nodes[:n]
        slope = side.slope_nodes[:n]
        c0v = np.asarray(costs.c0(xs), dtype=float)
        dp = -slope * p - 1.0 / sig2
        dq = -slope * q - c0v / sig2
        # corrected (Hermite) trapezoid: int = h/2 (f_l + f_r) - h^2/12 (f'_r - f'_l)
        h = np.diff(xs)
        seg_zeta = 2.0 * (h / 2 * (p[:-1] + p[1:]) - h * h / 12 * (dp[1:] - dp[:-1]))
        seg_g0 = 2.0 * (h / 2 * (q[:-1] + q[1:]) - h * h / 12 * (dq[1:] - dq[:-1]))
        zeta = np.concatenate([[0.0], np.cumsum(seg_zeta)])
        g0 = np.concatenate([[0.0], np.cumsum(seg_g0)])
        return xs, zeta, g0, p, q, slope, sig2, c0v

    xr, zer, g0r, pr, qr, slr, s2r, c0r = side_nodes(right, nr, ln_m_tail_r, ln_q_tail_r)
    xl, zel, g0l, pl, ql, sll, s2l, c0l = side_nodes(left, nl, ln_m_tail_l, ln_q_tail_l)

    xs = np.concatenate([xl[:0:-1], xr])
    zeta_v = np.concatenate([zel[:0:-1], zer])
    g0_v = np.concatenate([g0l[:0:-1], g0r])
    p_v = np.concatenate([pl[:0:-1], pr])
    q_v = np.concatenate([ql[:0:-1], qr])

    if not (np.all(np.isfinite(zeta_v)) and np.all(np.isfinite(g0_v))):
        raise DivergenceError("characteristic tabulation produced non-finite values")
    if np.any(p_v <= 0) or np.any(q_v < 0):
        raise DivergenceError("characteristic integrands must be positive on the domain")

    zeta_spl = CubicHermiteSpline(xs, zeta_v, 2 * p_v)
    g0_spl = CubicHermiteSpline(xs, g0_v, 2 * q_v)
    p_spl = CubicHermiteSpline(xs, p_v, np.concatenate([(-sll * pl - 1.0 / s2l)[:0:-1], -slr * pr - 1.0 / s2r]))
    q_spl = CubicHermiteSpline(xs, q_v, np.concatenate([(-sll * ql - c0l / s2l)[:0:-1], -slr * qr - c0r / s2r]))

    slope_fn = model.psi_slope
    sigma2 = model.sigma2

    def zeta_d2(x):
        return -slope_fn(x) * 2 * p_spl(x) - 2.0 / sigma2(x)

    def g0_d2(x):
        c0x = np.asarray(costs.c0(x), dtype=float)
        return -slope_fn(x) * 2 * q_spl(x) - 2.0 * c0x / sigma2(x)

    zeta = Fn(zeta_spl, lambda x: 2 * p_spl(x), zeta_d2, name="zeta[quadrature]")
    g0 = Fn(g0_spl, lambda x: 2 * q_spl(x), g0_d2, name="g0[quadrature]")

    return Characteristics(
        model=model,
        costs=costs,
        g0=g0,
        zeta=zeta,
        anchor=model.anchor,
        mode="quadrature",
        domain=(float(xs[0]), float(xs[-1])),
        left_attainable=boundary.left_attainable,
        apparatus=TableApparatus(tables),
        meta={"nodes": xs, "boundary": boundary, "q_total": q_total.value},
    )


def _closed_form(model: DiffusionModel, costs: CostModel) -> Characteristics | None:
    from . import models as _models

    return _models.closed_form_characteristics(model, costs)


def expected_cycle(chars: Characteristics, y: float, z: float) -> tuple[float, float]:
    """Expected (cost, length) of one cycle from z down to y.

    These are the differences g0(z) - g0(y) and zeta(z) - zeta(y); both are
    strictly positive for y < z.
    """
    model = chars.model
    if not (model.left < y < z < model.right):
        raise DomainError(
            f"expected_cycle requires a < y < z < b, got y={y}, z={z} in ({model.left}, {model.right})"
        )
    chars.require_inside(y, "y")
    chars.require_inside(z, "z")
    cost = float(chars.g0(z)) - float(chars.g0(y))
    length = float(chars.zeta(z)) - float(chars.zeta(y))
    return cost, length
