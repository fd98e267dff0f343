"""Simulation kernel layout and backend selection.

The Euler-Maruyama stepping loop dominates simulation runtime, so it is
implemented twice with one blockwise interface:

* ``ssinv._kernels`` -- a compiled Cython extension (preferred), and
* ``ssinv._kernels_py`` -- a vectorized numpy fallback,

selected at import time.  Both consume identical pre-generated normal
blocks from counter-based per-path streams (Philox keyed by
``(seed, path_index)``), so results are reproducible and independent of
how paths are distributed over worker threads; the additive dynamics are
bit-identical across backends, the log-scale dynamics agree to rounding
of the exponential.

State vector per path (float64):
    0 X         current inventory level
    1 ARMED     delayed-trigger armed flag
    2 HOLD      accumulated holding cost  (int c0 dt)
    3 ORDER     accumulated ordering cost
    4 LTIME     accumulated local time at the reflecting boundary
    5 NORD      number of orders placed
    6 TFIRST    time of the first order (-1 if none yet)
    7 CUMFIRST  cumulative cost just before the first order
    8 TLAST     time of the last order
    9 CUMLAST   cumulative cost just before the last order
    10 ABORT    global step index of a blow-up abort (-1 if alive)

Comparison-kernel state (order-splitting transform, float64):
    0 XO, 1 XT, 2 COSTO, 3 COSTT, 4 MINDIFF, 5 NVIOL, 6 COAL, 7 NORDT,
    8 DIFF (cost difference tracked incrementally to avoid absorption)
"""

from __future__ import annotations

import numpy as np

NSTATE = 11
X, ARMED, HOLD, ORDER, LTIME, NORD, TFIRST, CUMFIRST, TLAST, CUMLAST, ABORT = range(NSTATE)

NCSTATE = 9
XO, XT, COSTO, COSTT, MINDIFF, NVIOL, COAL, NORDT, DIFF = range(NCSTATE)

# integer config
I_DYN = 0  # 0 additive, 1 log-scale
I_REFLECT = 1
I_COST = 2  # 0 piecewise linear, 1 power
I_H = 3  # 0 none, 1 linear, 2 power
I_POLICY = 4  # 0 none, 1 order-up-to, 2 delayed-trigger
I_NBINS = 5
I_BURN = 6  # global step index where occupancy accumulation starts
NICFG = 7

# float config
F_DT = 0
F_DRIFT_DT = 1
F_SIG_SQDT = 2
F_C0A = 3  # c_b | k3
F_C0B = 4  # c_h | k4
F_BETA = 5
F_K1 = 6
F_K2 = 7
F_ETA = 8
F_K5 = 9
F_TRIG = 10
F_TARGET = 11
F_ARM = 12
F_HIST_LO = 13
F_HIST_DX = 14
F_SAFE_LO = 15
F_SAFE_HI = 16
NFCFG = 17

_MASK64 = (1 << 64) - 1

try:
    from . import _kernels as _compiled
except ImportError:  # pragma: no cover - depends on the build environment
    _compiled = None

from . import _kernels_py as _fallback

BACKEND = "cython" if _compiled is not None else "python"


def path_rng(seed: int, path_index: int) -> np.random.Generator:
    """Counter-based stream for one path: identical draws for identical
    (seed, path_index) regardless of scheduling."""
    key = ((seed & _MASK64) << 64) | (path_index & _MASK64)
    return np.random.Generator(np.random.Philox(key=key))


def advance(state, hist, z_block, step0, icfg, fcfg, *, backend: str | None = None):
    """Advance all paths through one block of normals, in place."""
    be = backend or BACKEND
    if be == "cython" and _compiled is not None:
        _compiled.advance(state, hist, z_block, step0, icfg, fcfg)
    else:
        _fallback.advance(state, hist, z_block, step0, icfg, fcfg)


def compare_advance(cstate, z_block, icfg, fcfg, *, backend: str | None = None):
    """Advance the paired original/transformed processes through one block."""
    be = backend or BACKEND
    if be == "cython" and _compiled is not None:
        _compiled.compare_advance(cstate, z_block, icfg, fcfg)
    else:
        _fallback.compare_advance(cstate, z_block, icfg, fcfg)
