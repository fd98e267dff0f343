"""Holding/back-order and ordering cost structures, with validation.

The ordering cost is always represented in the form
``c1(y, z) = k1 + H(z) - H(y)`` with ``H`` nondecreasing and ``k1 > 0``.
Any cost satisfying the equal-displacement identity
``c1(w,z) + c1(x,y) = c1(w,y) + c1(x,z)`` is of this form up to the same
differences, so the identity (and with it subadditivity and monotonicity
in the first argument) holds by construction rather than by numerical
test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError
from .funcs import Fn
from .sde import BoundaryReport, DiffusionModel, ScaleSpeedTables, _log_trap, _series_verdict, build_tables, classify_boundaries

__all__ = [
    "CostModel",
    "CostValidationReport",
    "ordering_cost",
    "validate_costs",
    "holding_piecewise_linear",
    "holding_power",
    "ordering_linear",
    "ordering_power",
]


@dataclass(frozen=True)
class CostModel:
    """Holding rate c0 plus ordering cost k1 + H(z) - H(y)."""

    c0: Fn
    H: Fn
    k1: float
    c0_kind: str = "generic"  # "piecewise_linear" | "power" | "generic"
    H_kind: str = "generic"  # "linear" | "power" | "zero" | "generic"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.k1 > 0:
            raise DomainError(f"fixed order cost k1 must be positive, got {self.k1}")

    def c1(self, y: float, z: float) -> float:
        return ordering_cost(self, y, z)


def ordering_cost(costs: CostModel, y: float, z: float) -> float:
    """c1(y, z) = k1 + H(z) - H(y) for y <= z."""
    if y > z:
        raise DomainError(f"ordering cost requires y <= z, got y={y}, z={z}")
    return costs.k1 + float(costs.H(z)) - float(costs.H(y))


# -- builtin shapes ---------------------------------------------------------


def holding_piecewise_linear(c_b: float, c_h: float) -> Fn:
    """c0(x) = -c_b x for x < 0, c_h x for x >= 0."""

    def f(x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, -c_b * x, c_h * x)

    def d1(x):
        return -c_b if x < 0 else c_h

    def d2(x):
        return 0.0

    return Fn(f, d1, d2, name=f"piecewise_linear(c_b={c_b}, c_h={c_h})")


def holding_power(k3: float, k4: float, beta: float) -> Fn:
    """c0(x) = k3 x + k4 x^beta on x > 0 (beta < 0)."""

    def f(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore", divide="ignore"):
            return k3 * x + k4 * np.power(x, beta)

    def d1(x):
        return k3 + k4 * beta * x ** (beta - 1)

    def d2(x):
        return k4 * beta * (beta - 1) * x ** (beta - 2)

    return Fn(f, d1, d2, name=f"power(k3={k3}, k4={k4}, beta={beta})")


def ordering_linear(k2: float) -> Fn:
    """H(x) = k2 x, i.e. proportional per-unit ordering cost."""

    def f(x):
        return k2 * np.asarray(x, dtype=float)

    return Fn(f, lambda x: k2, lambda x: 0.0, name=f"linear(k2={k2})")


def ordering_power(k2: float, eta: float) -> Fn:
    """H(x) = k2 x^eta on x > 0 with 0 < eta <= 1 (economies of scale)."""
    if not 0 < eta <= 1:
        raise DomainError(f"eta must lie in (0, 1], got {eta}")

    def f(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            return k2 * np.power(x, eta)

    def d1(x):
        return k2 * eta * x ** (eta - 1.0)

    def d2(x):
        return k2 * eta * (eta - 1.0) * x ** (eta - 2.0)

    return Fn(f, d1, d2, name=f"power(k2={k2}, eta={eta})")


# -- validation -------------------------------------------------------------


@dataclass(frozen=True)
class CostValidationReport:
    """Tri-state results for the standing cost conditions.

    ``inf_compact``: sublevel sets of c0 look compact on a scan grid.
    ``boundary_limits``: c0 grows without bound at state-space boundaries.
    ``c0_m_integrable``: int_y^b c0 dM < infty.
    ``double_integral_diverges``: int_y^b int_u^b c0 dM dS = infty.
    """

    inf_compact: str
    boundary_limits: str
    c0_m_integrable: str
    double_integral_diverges: str
    witnesses: dict

    @property
    def all_pass(self) -> bool:
        return all(
            v == "pass"
            for v in (
                self.inf_compact,
                self.boundary_limits,
                self.c0_m_integrable,
                self.double_integral_diverges,
            )
        )

    def failures(self) -> list[str]:
        return [
            name
            for name, v in (
                ("inf_compact", self.inf_compact),
                ("boundary_limits", self.boundary_limits),
                ("c0_m_integrable", self.c0_m_integrable),
                ("double_integral_diverges", self.double_integral_diverges),
            )
            if v != "pass"
        ]


def _growth_scan(c0: Callable, grid: np.ndarray) -> tuple[str, dict]:
    """Heuristic inf-compactness: c0 at each end exceeds 10x the interior
    minimum and trends upward toward both ends."""
    vals = np.asarray(c0(grid), dtype=float)
    interior_min = float(np.nanmin(vals))
    scale = max(interior_min, 1e-12)
    left_ok = vals[0] > 10 * scale
    right_ok = vals[-1] > 10 * scale
    k = min(5, len(vals) // 4)
    trend_left = bool(np.all(np.diff(vals[:k]) <= 1e-12 * scale))
    trend_right = bool(np.all(np.diff(vals[-k:]) >= -1e-12 * scale))
    witness = {"grid": grid, "values": vals, "interior_min": interior_min}
    if left_ok and right_ok and trend_left and trend_right:
        return "pass", witness
    if not left_ok or not right_ok:
        return "fail", witness
    return "indeterminate", witness


def _edge_grid(model: DiffusionModel, n: int = 48) -> np.ndarray:
    C = model.anchor
    pts = [np.array([C])]
    for side, bound in ((1.0, model.right), (-1.0, model.left)):
        if math.isinf(bound):
            d = np.geomspace(1e-4, 1e6, n)
        else:
            d = abs(bound - C) * (1.0 - np.geomspace(1e-9, 1.0 - 1e-9, n))
        pts.append(C + side * d[::-1] if side < 0 else C + side * d)
    left, mid, right = pts[2], pts[0], pts[1]
    return np.concatenate([left[::-1], mid, right])


def validate_costs(
    model: DiffusionModel,
    costs: CostModel,
    tables: ScaleSpeedTables | None = None,
    boundary: BoundaryReport | None = None,
) -> CostValidationReport:
    """Check the standing cost conditions numerically.

    Inf-compactness cannot be certified numerically in general, so that
    entry (and the boundary-limit entry) is an honest tri-state heuristic;
    the two integral conditions use the same certified improper-integral
    machinery as the scale/speed tabulation.
    """
    if tables is None:
        tables = build_tables(model)
    if boundary is None:
        boundary = classify_boundaries(model, tables=tables)

    witnesses: dict = {}

    grid = _edge_grid(model)
    inf_compact, w = _growth_scan(costs.c0, grid)
    witnesses["inf_compact"] = w

    # c0 -> infinity at boundaries that belong to the state space: the left
    # boundary when attainable, the right when it is an entrance point.
    checks = []
    if boundary.left_attainable:
        vals = np.asarray(costs.c0(grid[: len(grid) // 3]), dtype=float)
        interior = float(np.nanmin(np.asarray(costs.c0(grid), dtype=float)))
        checks.append(vals[0] > 10 * max(interior, 1e-12))
    if boundary.right_class == "entrance":
        vals = np.asarray(costs.c0(grid[-len(grid) // 3 :]), dtype=float)
        interior = float(np.nanmin(np.asarray(costs.c0(grid), dtype=float)))
        checks.append(vals[-1] > 10 * max(interior, 1e-12))
    boundary_limits = "pass" if all(checks) else "fail"
    witnesses["boundary_limits"] = {"applicable": len(checks), "ok": all(checks)}

    # int_C^b c0 dM
    right = tables.right_side
    ln_gap_q = right.ln_gap_cost(costs.c0)
    q_total = right._block_verdict(ln_gap_q)
    c0_m_integrable = {
        "converged": "pass",
        "divergent": "fail",
        "indeterminate": "indeterminate",
    }[q_total.status]
    witnesses["c0_m_integrable"] = {"value": q_total.value, "status": q_total.status}

    # int_C^b [int_u^b c0 dM] dS(u): must diverge.  When the inner integral
    # itself diverges the double integral is trivially infinite.
    if q_total.status == "divergent":
        dbl_status = "divergent"
        dbl_value = math.inf
    else:
        rev = np.concatenate([[-math.inf], ln_gap_q[::-1]])
        ln_q_tail = np.logaddexp.accumulate(rev)[::-1]
        with np.errstate(invalid="ignore"):
            ln_f = ln_q_tail - right.psi
        dbl = right._block_verdict(_log_trap(ln_f, right.widths))
        dbl_status, dbl_value = dbl.status, dbl.value
    double_integral_diverges = {
        "divergent": "pass",
        "converged": "fail",
        "indeterminate": "indeterminate",
    }[dbl_status]
    witnesses["double_integral"] = {"value": dbl_value, "status": dbl_status}

    return CostValidationReport(
        inf_compact=inf_compact,
        boundary_limits=boundary_limits,
        c0_m_integrable=c0_m_integrable,
        double_integral_diverges=double_integral_diverges,
        witnesses=witnesses,
    )
