# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled simulation kernels; see ssinv.kernels for the layout."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, isnan, pow

cnp.import_array()


cdef inline double _c0(double x, long cost_kind, double a, double b, double beta) nogil:
    if cost_kind == 0:
        return -a * x if x < 0.0 else b * x
    return a * x + b * pow(x, beta)


cdef inline double _h(double x, long h_kind, double k2, double eta) nogil:
    if h_kind == 1:
        return k2 * x
    if h_kind == 2:
        return k2 * pow(x, eta)
    return 0.0


def advance(double[:, ::1] state, cnp.int64_t[:, ::1] hist, double[:, ::1] z_block,
            long step0, cnp.int64_t[::1] icfg, double[::1] fcfg):
    cdef Py_ssize_t n = z_block.shape[0]
    cdef Py_ssize_t block = z_block.shape[1]
    cdef long dyn = <long>icfg[0]
    cdef long reflect = <long>icfg[1]
    cdef long cost_kind = <long>icfg[2]
    cdef long h_kind = <long>icfg[3]
    cdef long policy = <long>icfg[4]
    cdef long nbins = <long>icfg[5]
    cdef long burn = <long>icfg[6]

    cdef double dt = fcfg[0]
    cdef double drift_dt = fcfg[1]
    cdef double sig_sqdt = fcfg[2]
    cdef double c0a = fcfg[3]
    cdef double c0b = fcfg[4]
    cdef double beta = fcfg[5]
    cdef double k1 = fcfg[6]
    cdef double k2 = fcfg[7]
    cdef double eta = fcfg[8]
    cdef double k5 = fcfg[9]
    cdef double trig = fcfg[10]
    cdef double target = fcfg[11]
    cdef double arm_level = fcfg[12]
    cdef double hist_lo = fcfg[13]
    cdef double hist_dx = fcfg[14]
    cdef double safe_lo = fcfg[15]
    cdef double safe_hi = fcfg[16]

    cdef double h_target = _h(target, h_kind, k2, eta)
    cdef Py_ssize_t i, k
    cdef long b
    cdef int armed, trig_now
    cdef double x, xn, z, t, cost, cum
    cdef double hold, order, ltime, nord, tfirst, cumfirst, tlast, cumlast, abort

    with nogil:
        for i in range(n):
            x = state[i, 0]
            armed = 1 if state[i, 1] > 0.5 else 0
            hold = state[i, 2]
            order = state[i, 3]
            ltime = state[i, 4]
            nord = state[i, 5]
            tfirst = state[i, 6]
            cumfirst = state[i, 7]
            tlast = state[i, 8]
            cumlast = state[i, 9]
            abort = state[i, 10]
            if abort < 0:
                for k in range(block):
                    z = z_block[i, k]
                    if dyn == 0:
                        xn = x + drift_dt + sig_sqdt * z
                    else:
                        xn = x * exp(drift_dt + sig_sqdt * z)
                    t = (step0 + k + 1) * dt
                    trig_now = 0
                    if policy == 2 and xn <= arm_level:
                        armed = 1
                    if policy == 1 and xn <= trig:
                        trig_now = 1
                    if reflect and trig_now == 0 and xn < 0.0:
                        ltime += -xn
                        xn = 0.0
                    if policy == 2 and armed and xn >= trig:
                        trig_now = 1
                    if trig_now:
                        cost = k1 + h_target - _h(xn, h_kind, k2, eta)
                        cum = hold + order + k5 * ltime
                        if nord == 0:
                            tfirst = t
                            cumfirst = cum
                        tlast = t
                        cumlast = cum
                        order += cost
                        nord += 1
                        xn = target
                        if policy == 2:
                            armed = 0
                    if not (safe_lo <= xn <= safe_hi) or isnan(xn):
                        abort = step0 + k
                        x = xn
                        break
                    x = xn
                    hold += _c0(xn, cost_kind, c0a, c0b, beta) * dt
                    if step0 + k >= burn:
                        b = <long>((xn - hist_lo) / hist_dx)
                        if b < 0:
                            b = 0
                        if b >= nbins:
                            b = nbins - 1
                        hist[i, b] += 1
            state[i, 0] = x
            state[i, 1] = 1.0 if armed else 0.0
            state[i, 2] = hold
            state[i, 3] = order
            state[i, 4] = ltime
            state[i, 5] = nord
            state[i, 6] = tfirst
            state[i, 7] = cumfirst
            state[i, 8] = tlast
            state[i, 9] = cumlast
            state[i, 10] = abort


def compare_advance(double[:, ::1] cstate, double[:, ::1] z_block,
                    cnp.int64_t[::1] icfg, double[::1] fcfg):
    cdef Py_ssize_t n = z_block.shape[0]
    cdef Py_ssize_t block = z_block.shape[1]
    cdef double dt = fcfg[0]
    cdef double drift_dt = fcfg[1]
    cdef double sig_sqdt = fcfg[2]
    cdef double k3 = fcfg[3]
    cdef double k4 = fcfg[4]
    cdef double beta = fcfg[5]
    cdef double k1 = fcfg[6]
    cdef double k2 = fcfg[7]
    cdef double eta = fcfg[8]
    cdef double y_lvl = fcfg[10]
    cdef double z_lvl = fcfg[11]
    cdef double h_z = k2 * pow(z_lvl, eta)

    cdef Py_ssize_t i, k
    cdef int coal
    cdef double xo, xt, co, ct, mindiff, nviol, nordt, r, tgt, cost, diff

    with nogil:
        for i in range(n):
            xo = cstate[i, 0]
            xt = cstate[i, 1]
            co = cstate[i, 2]
            ct = cstate[i, 3]
            mindiff = cstate[i, 4]
            nviol = cstate[i, 5]
            coal = 1 if cstate[i, 6] > 0.5 else 0
            nordt = cstate[i, 7]
            diff = cstate[i, 8]
            for k in range(block):
                r = exp(drift_dt + sig_sqdt * z_block[i, k])
                xo = xo * r
                if coal:
                    xt = xo
                else:
                    xt = xt * r
                    if xt <= y_lvl:
                        tgt = z_lvl if z_lvl < xo else xo
                        cost = k1 + (h_z if tgt == z_lvl else k2 * pow(tgt, eta)) - k2 * pow(xt, eta)
                        ct += cost
                        diff -= cost
                        nordt += 1
                        if tgt == xo:
                            coal = 1
                        xt = tgt
                if not coal:
                    diff += ((k3 * xo + k4 * pow(xo, beta)) - (k3 * xt + k4 * pow(xt, beta))) * dt
                    co += (k3 * xo + k4 * pow(xo, beta)) * dt
                    ct += (k3 * xt + k4 * pow(xt, beta)) * dt
                if diff < mindiff:
                    mindiff = diff
                if xt > xo * (1.0 + 1e-12) or (coal == 0 and xt < y_lvl * (1.0 - 1e-12)):
                    nviol += 1.0
            cstate[i, 0] = xo
            cstate[i, 1] = xt
            cstate[i, 2] = co
            cstate[i, 3] = ct
            cstate[i, 4] = mindiff
            cstate[i, 5] = nviol
            cstate[i, 6] = 1.0 if coal else 0.0
            cstate[i, 7] = nordt
            cstate[i, 8] = diff
