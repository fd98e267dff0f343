"""Low-level numerical helpers: improper integrals with divergence
certification, and high-order finite-difference stencils.

Improper integrals over a tail (toward an infinite endpoint, or toward a
finite endpoint where the integrand may blow up) are evaluated as a sum of
geometric blocks.  The verdict is one of

    ``converged``     partial sums settled within tolerance,
    ``divergent``     partial sums exceeded the cap with non-decreasing
                      block increments, or the increments themselves
                      stayed non-decreasing over many consecutive blocks
                      (certifies logarithmic divergence),
    ``indeterminate`` the block budget ran out with neither certificate.

Extended-real results are carried explicitly through `ImproperResult`
rather than as bare sentinel floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad

DIVERGENCE_CAP = 1e12
# Consecutive non-shrinking block increments needed to certify divergence.
FLAT_BLOCKS_FOR_DIVERGENCE = 30


@dataclass(frozen=True)
class ImproperResult:
    """Value and verdict of an improper integral."""

    value: float
    status: str  # "converged" | "divergent" | "indeterminate"

    @property
    def finite(self) -> bool:
        return self.status == "converged"

    @property
    def divergent(self) -> bool:
        return self.status == "divergent"

    def as_float(self) -> float:
        """Collapse to a float, mapping a certified divergence to +inf."""
        if self.status == "divergent":
            return math.inf
        return self.value


def _quad(f, lo, hi) -> float:
    val, _ = quad(f, lo, hi, limit=200, epsabs=1e-13, epsrel=1e-11)
    return val


def tail_integral(
    f: Callable[[float], float],
    start: float,
    end: float,
    *,
    rtol: float = 1e-10,
    max_blocks: int = 240,
    first_width: float | None = None,
    growth: float = 1.6,
) -> ImproperResult:
    """Integrate ``f`` from ``start`` toward ``end`` using geometric blocks.

    ``end`` may be ``+-inf`` (blocks grow geometrically) or finite (blocks
    shrink geometrically toward it, handling an integrable or divergent
    singularity at the endpoint).  ``f`` must be nonnegative-ish in the far
    tail for the divergence certificate to be meaningful; that holds for all
    scale/speed integrands used here.
    """
    sign = 1.0
    if end < start:
        # Mirror so the block logic always marches rightward.
        f_orig = f
        f = lambda t: f_orig(-t)  # noqa: E731
        start, end = -start, -end
        sign = 1.0  # measure integrals are orientation-free here

    total = 0.0
    increments: list[float] = []
    if math.isinf(end):
        width = first_width if first_width is not None else max(1.0, abs(start) * 0.5)
        lo = start
        for _ in range(max_blocks):
            hi = lo + width
            inc = _quad(f, lo, hi)
            total += inc
            increments.append(abs(inc))
            verdict = _verdict(total, increments, rtol)
            if verdict is not None:
                return ImproperResult(sign * total, verdict)
            lo = hi
            width *= growth
    else:
        gap = end - start
        if gap <= 0.0:
            return ImproperResult(0.0, "converged")
        # Cut points approach the finite endpoint geometrically.
        frac = 0.5
        hi_frac = 1.0
        for _ in range(max_blocks):
            lo_frac = hi_frac * frac
            lo_pt = end - gap * lo_frac
            hi_pt = end - gap * hi_frac
            inc = _quad(f, hi_pt, lo_pt)
            total += inc
            increments.append(abs(inc))
            verdict = _verdict(total, increments, rtol)
            if verdict is not None:
                return ImproperResult(sign * total, verdict)
            hi_frac = lo_frac
            if gap * hi_frac < 1e-290:
                return ImproperResult(sign * total, "converged")
    return ImproperResult(sign * total, "indeterminate")


def _verdict(total: float, increments: list[float], rtol: float) -> str | None:
    inc = increments[-1]
    if abs(total) > DIVERGENCE_CAP and len(increments) >= 2 and inc >= increments[-2] * (1 - 1e-9):
        return "divergent"
    n = FLAT_BLOCKS_FOR_DIVERGENCE
    if len(increments) >= n:
        window = increments[-n:]
        nondecreasing = all(b >= a * (1 - 1e-6) for a, b in zip(window, window[1:]))
        if nondecreasing and window[-1] > rtol * max(abs(total), 1e-300):
            return "divergent"
    if len(increments) >= 3:
        scale = max(abs(total), 1e-300)
        if increments[-1] <= rtol * scale and increments[-2] <= rtol * scale:
            return "converged"
    return None


def interval_integral(f, lo, hi, *, rtol: float = 1e-10) -> ImproperResult:
    """Integral over [lo, hi] where either endpoint may be infinite or
    singular; interior portions use adaptive quadrature directly."""
    if lo > hi:
        raise ValueError("interval_integral requires lo <= hi")
    if lo == hi:
        return ImproperResult(0.0, "converged")
    if math.isinf(lo) and math.isinf(hi):
        left = tail_integral(f, 0.0, -math.inf, rtol=rtol)
        right = tail_integral(f, 0.0, math.inf, rtol=rtol)
        return _combine(left, right)
    if math.isinf(hi):
        return tail_integral(f, lo, math.inf, rtol=rtol)
    if math.isinf(lo):
        return tail_integral(f, hi, -math.inf, rtol=rtol)
    return ImproperResult(_quad(f, lo, hi), "converged")


def _combine(a: ImproperResult, b: ImproperResult) -> ImproperResult:
    if a.divergent or b.divergent:
        return ImproperResult(math.inf, "divergent")
    if a.status == "indeterminate" or b.status == "indeterminate":
        return ImproperResult(a.value + b.value, "indeterminate")
    return ImproperResult(a.value + b.value, "converged")


def fd_first(f: Callable[[float], float], x: float, h: float) -> float:
    """Five-point first derivative, O(h^4)."""
    return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h)


def fd_second(f: Callable[[float], float], x: float, h: float) -> float:
    """Five-point second derivative, O(h^4)."""
    return (
        -f(x - 2 * h) + 16 * f(x - h) - 30 * f(x) + 16 * f(x + h) - f(x + 2 * h)
    ) / (12 * h * h)


def logsumexp_pair(a: np.ndarray | float, b: np.ndarray | float):
    return np.logaddexp(a, b)


def log_accumulate(log_terms: np.ndarray) -> np.ndarray:
    """Running log-sum-exp of a sequence of log-space terms."""
    out = np.empty_like(log_terms)
    running = -np.inf
    for i, t in enumerate(log_terms):
        running = np.logaddexp(running, t)
        out[i] = running
    return out
