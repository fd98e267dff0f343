"""Pure-numpy fallback simulation kernels (vectorized across paths).

Per-path arithmetic follows the same operation order as the compiled
kernels so the additive dynamics agree bitwise; see `ssinv.kernels` for
the state and config layout.
"""

from __future__ import annotations

import numpy as np


def _c0(xn, icfg, fcfg):
    if icfg[2] == 0:  # piecewise linear
        return np.where(xn < 0.0, -fcfg[3] * xn, fcfg[4] * xn)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        return fcfg[3] * xn + fcfg[4] * np.power(xn, fcfg[5])


def _h(xn, icfg, fcfg):
    if icfg[3] == 1:
        return fcfg[7] * xn
    if icfg[3] == 2:
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            return fcfg[7] * np.power(xn, fcfg[8])
    return np.zeros_like(xn)


def advance(state, hist, z_block, step0, icfg, fcfg, c0_fn=None, h_fn=None, step_fn=None):
    """Advance one block.  Optional callables override the builtin
    dynamics (``step_fn(x, z) -> next level``) and cost shapes, enabling
    models given by arbitrary drift/diffusion expressions."""
    n, block = z_block.shape
    dt = fcfg[0]
    drift_dt = fcfg[1]
    sig_sqdt = fcfg[2]
    k1 = fcfg[6]
    k5 = fcfg[9]
    trig = fcfg[10]
    target = fcfg[11]
    arm_level = fcfg[12]
    hist_lo = fcfg[13]
    hist_dx = fcfg[14]
    safe_lo = fcfg[15]
    safe_hi = fcfg[16]
    dyn = int(icfg[0])
    reflect = int(icfg[1])
    policy = int(icfg[4])
    nbins = int(icfg[5])
    burn = int(icfg[6])

    x = state[:, 0].copy()
    armed = state[:, 1] > 0.5
    hold = state[:, 2].copy()
    order = state[:, 3].copy()
    ltime = state[:, 4].copy()
    nord = state[:, 5].copy()
    tfirst = state[:, 6].copy()
    cumfirst = state[:, 7].copy()
    tlast = state[:, 8].copy()
    cumlast = state[:, 9].copy()
    abort = state[:, 10].copy()

    c0 = (lambda v: c0_fn(v)) if c0_fn is not None else (lambda v: _c0(v, icfg, fcfg))
    hh = (lambda v: h_fn(v)) if h_fn is not None else (lambda v: _h(v, icfg, fcfg))
    h_target = float(hh(np.asarray(target)))
    buf = np.empty((n, block))

    for k in range(block):
        alive = abort < 0
        if not alive.any():
            buf[:, k:] = np.nan
            break
        z = z_block[:, k]
        if step_fn is not None:
            xn = step_fn(x, z)
        elif dyn == 0:
            xn = x + drift_dt + sig_sqdt * z
        else:
            xn = x * np.exp(drift_dt + sig_sqdt * z)
        xn = np.where(alive, xn, x)
        t = (step0 + k + 1) * dt

        if policy == 2:
            armed = armed | (alive & (xn <= arm_level))

        trig_mask = np.zeros(n, dtype=bool)
        if policy == 1:
            trig_mask = alive & (xn <= trig)
        if reflect:
            refl_mask = alive & ~trig_mask & (xn < 0.0)
            if refl_mask.any():
                ltime = np.where(refl_mask, ltime - xn, ltime)
                xn = np.where(refl_mask, 0.0, xn)
        if policy == 2:
            trig_mask = alive & armed & (xn >= trig)

        if trig_mask.any():
            cost = k1 + h_target - hh(xn)
            cum = hold + order + k5 * ltime
            first = trig_mask & (nord == 0)
            tfirst = np.where(first, t, tfirst)
            cumfirst = np.where(first, cum, cumfirst)
            tlast = np.where(trig_mask, t, tlast)
            cumlast = np.where(trig_mask, cum, cumlast)
            order = np.where(trig_mask, order + cost, order)
            nord = np.where(trig_mask, nord + 1, nord)
            xn = np.where(trig_mask, target, xn)
            if policy == 2:
                armed = armed & ~trig_mask

        bad = alive & (~((xn >= safe_lo) & (xn <= safe_hi)) | np.isnan(xn))
        if bad.any():
            abort = np.where(bad, float(step0 + k), abort)
            alive = abort < 0
        x = np.where(alive | bad, xn, x)
        hold = np.where(alive, hold + c0(xn) * dt, hold)
        buf[:, k] = np.where(alive, xn, np.nan)

    # occupancy accumulation for this block
    ks = np.arange(block)
    col_ok = (step0 + ks) >= burn
    vals = buf[:, col_ok]
    ok = np.isfinite(vals)
    if ok.any():
        rows = np.broadcast_to(np.arange(n)[:, None], vals.shape)[ok]
        bins = np.clip(((vals[ok] - hist_lo) / hist_dx).astype(np.int64), 0, nbins - 1)
        np.add.at(hist, (rows, bins), 1)

    state[:, 0] = x
    state[:, 1] = armed.astype(float)
    state[:, 2] = hold
    state[:, 3] = order
    state[:, 4] = ltime
    state[:, 5] = nord
    state[:, 6] = tfirst
    state[:, 7] = cumfirst
    state[:, 8] = tlast
    state[:, 9] = cumlast
    state[:, 10] = abort


def compare_advance(cstate, z_block, icfg, fcfg):
    """Shared-noise stepping of an original single-order path and its
    order-splitting transform (gBM dynamics), tracking the running minimum
    of the cumulative cost difference and level-ordering violations."""
    n, block = z_block.shape
    dt = fcfg[0]
    drift_dt = fcfg[1]
    sig_sqdt = fcfg[2]
    k3 = fcfg[3]
    k4 = fcfg[4]
    beta = fcfg[5]
    k1 = fcfg[6]
    k2 = fcfg[7]
    eta = fcfg[8]
    y_lvl = fcfg[10]
    z_lvl = fcfg[11]

    xo = cstate[:, 0].copy()
    xt = cstate[:, 1].copy()
    co = cstate[:, 2].copy()
    ct = cstate[:, 3].copy()
    mindiff = cstate[:, 4].copy()
    nviol = cstate[:, 5].copy()
    coal = cstate[:, 6] > 0.5
    nordt = cstate[:, 7].copy()
    diff = cstate[:, 8].copy()

    def c0(v):
        with np.errstate(over="ignore", divide="ignore"):
            return k3 * v + k4 * np.power(v, beta)

    def hfun(v):
        with np.errstate(over="ignore", divide="ignore"):
            return k2 * np.power(v, eta)

    h_z = float(hfun(np.array(z_lvl)))
    for k in range(block):
        r = np.exp(drift_dt + sig_sqdt * z_block[:, k])
        xo = xo * r
        xt = np.where(coal, xo, xt * r)
        trig = ~coal & (xt <= y_lvl)
        if trig.any():
            tgt = np.minimum(z_lvl, xo)
            cost = k1 + np.where(tgt == z_lvl, h_z, hfun(tgt)) - hfun(xt)
            ct = np.where(trig, ct + cost, ct)
            diff = np.where(trig, diff - cost, diff)
            nordt = np.where(trig, nordt + 1, nordt)
            coal = coal | (trig & (tgt == xo))
            xt = np.where(trig, tgt, xt)
        live = ~coal
        if live.any():
            hold_gap = (c0(xo) - c0(xt)) * dt
            diff = np.where(live, diff + hold_gap, diff)
            co = np.where(live, co + c0(xo) * dt, co)
            ct = np.where(live, ct + c0(xt) * dt, ct)
        mindiff = np.minimum(mindiff, diff)
        viol = (xt > xo * (1.0 + 1e-12)) | (~coal & (xt < y_lvl * (1.0 - 1e-12)))
        nviol = nviol + viol

    cstate[:, 0] = xo
    cstate[:, 1] = xt
    cstate[:, 2] = co
    cstate[:, 3] = ct
    cstate[:, 4] = mindiff
    cstate[:, 5] = nviol
    cstate[:, 6] = coal.astype(float)
    cstate[:, 7] = nordt
    cstate[:, 8] = diff
