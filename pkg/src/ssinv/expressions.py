"""A small arithmetic expression language over ``x``.

Model and cost coefficients can be given in config files as strings such
as ``"-0.5*x"`` or ``"exp(-x) + 2"``.  Expressions are parsed with
:mod:`ast` and validated against a whitelist before compilation, so no
arbitrary code can run.  Compiled expressions are numpy-vectorized.
"""

from __future__ import annotations

import ast
import math
from typing import Callable

import numpy as np

from .errors import ConfigError

_ALLOWED_CALLS = {
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "pow": np.power,
}

_ALLOWED_NAMES = {"x": None, "pi": math.pi, "e": math.e}

_ALLOWED_NODES = (
    ast.Expression,
    ast.BinOp,
    ast.UnaryOp,
    ast.Add,
    ast.Sub,
    ast.Mult,
    ast.Div,
    ast.Pow,
    ast.USub,
    ast.UAdd,
    ast.Constant,
    ast.Name,
    ast.Call,
    ast.Load,
)


def _validate(node: ast.AST, src: str) -> None:
    for child in ast.walk(node):
        if not isinstance(child, _ALLOWED_NODES):
            raise ConfigError(f"disallowed syntax {type(child).__name__!r} in expression {src!r}")
        if isinstance(child, ast.Call):
            if not isinstance(child.func, ast.Name) or child.func.id not in _ALLOWED_CALLS:
                raise ConfigError(f"disallowed function call in expression {src!r}")
            if child.keywords:
                raise ConfigError(f"keyword arguments not allowed in expression {src!r}")
        if isinstance(child, ast.Name) and child.id not in _ALLOWED_NAMES and child.id not in _ALLOWED_CALLS:
            raise ConfigError(f"unknown name {child.id!r} in expression {src!r}")
        if isinstance(child, ast.Constant) and not isinstance(child.value, (int, float)):
            raise ConfigError(f"non-numeric constant in expression {src!r}")


def compile_expression(src: str) -> Callable[[np.ndarray], np.ndarray]:
    """Compile a validated expression into a vectorized callable of x."""
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression {src!r}: {exc}") from exc
    _validate(tree, src)
    code = compile(tree, "<expression>", "eval")
    env = dict(_ALLOWED_CALLS)
    env["pi"] = math.pi
    env["e"] = math.e

    def fn(x):
        local = dict(env)
        local["x"] = x
        out = eval(code, {"__builtins__": {}}, local)  # noqa: S307 (AST-validated)
        return np.broadcast_to(np.asarray(out, dtype=float), np.shape(x)).copy() if np.ndim(out) == 0 and np.ndim(x) > 0 else out

    fn.source = src  # type: ignore[attr-defined]
    return fn
