"""Callable wrapper carrying optional analytic derivatives.

Several parts of the package (cost rates, ordering shapes, the g0/zeta
characteristics, the QVI function G) are "functions with derivatives".
`Fn` packages a vectorized callable together with first and second
derivative callables; when a derivative is not supplied it falls back to
five-point finite differences.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .numerics import fd_first, fd_second


class Fn:
    """Vectorized callable with ``derivative_at`` / ``second_derivative_at``."""

    def __init__(
        self,
        f: Callable,
        d1: Callable | None = None,
        d2: Callable | None = None,
        name: str = "",
    ):
        self._f = f
        self._d1 = d1
        self._d2 = d2
        self.name = name

    def __call__(self, x):
        return self._f(x)

    @property
    def has_analytic_derivatives(self) -> bool:
        return self._d1 is not None and self._d2 is not None

    def derivative_at(self, x):
        if self._d1 is not None:
            return self._d1(x)
        h = 1e-6 * max(1.0, abs(float(x)))
        return fd_first(lambda t: float(self._f(t)), float(x), h)

    def second_derivative_at(self, x):
        if self._d2 is not None:
            return self._d2(x)
        h = 2e-4 * max(1.0, abs(float(x)))
        return fd_second(lambda t: float(self._f(t)), float(x), h)

    def __repr__(self):
        return f"Fn({self.name or self._f!r})"
