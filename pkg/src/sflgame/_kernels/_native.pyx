# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled solver kernels: cyclic best-response sweeps and projected ascent.

Semantics mirror ``sflgame._kernels.pure`` one-to-one; the test suite
cross-checks both backends on identical inputs.
"""

from libc.math cimport sqrt, fabs, INFINITY

import numpy as np

BACKEND = "native"


def br_iterate(weights, unit_costs, caps, reward, d0, double tol, int max_iters):
    """See ``sflgame._kernels.pure.br_iterate``."""
    cdef const double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef const double[::1] h = np.ascontiguousarray(unit_costs, dtype=np.float64)
    cdef const double[::1] cap = np.ascontiguousarray(caps, dtype=np.float64)
    d_arr = np.array(d0, dtype=np.float64)
    cdef double[::1] d = d_arr
    cdef Py_ssize_t n = w.shape[0]
    cdef double r = reward

    gain_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] gain = gain_arr
    cdef Py_ssize_t k
    for k in range(n):
        gain[k] = w[k] * r / h[k]

    cdef double total, others, change, residual = INFINITY, root
    cdef double br, step, slope, diff, new, half
    cdef int sweeps = 0, it
    for it in range(1, max_iters + 1):
        sweeps = it
        total = 0.0
        for k in range(n):
            total += d[k]
        residual = 0.0
        for k in range(n):
            others = total - d[k]
            if others <= 0.0:
                br = 0.0
                step = 0.0
            elif gain[k] <= others:
                br = 0.0
                step = 0.5
            else:
                root = sqrt(others)
                br = root * (sqrt(gain[k]) - root)
                slope = sqrt(gain[k] / others) * 0.5 - 1.0
                step = 1.0 / (1.0 + fabs(slope))
                if br > cap[k]:
                    br = cap[k]
            diff = br - d[k]
            change = fabs(diff)
            if change > residual:
                residual = change
            new = d[k] + step * diff
            total += new - d[k]
            d[k] = new
        if residual < tol:
            break

    cdef double value
    cdef double[::1] out
    if residual < tol:
        total = 0.0
        for k in range(n):
            total += d[k]
        out_arr = np.empty(n, dtype=np.float64)
        out = out_arr
        for k in range(n):
            others = total - d[k]
            if others <= 0.0:
                out[k] = d[k]
            elif gain[k] <= others:
                out[k] = 0.0
            else:
                root = sqrt(others)
                value = root * (sqrt(gain[k]) - root)
                out[k] = cap[k] if value > cap[k] else value
        return out_arr, sweeps, residual
    return d_arr, sweeps, residual


cdef double _objective(const double[::1] w, const double[::1] h, double r, const double[::1] d) nogil:
    cdef Py_ssize_t n = w.shape[0], k
    cdef double total = 0.0, pooled = 0.0, cost = 0.0
    for k in range(n):
        total += d[k]
        pooled += w[k] * d[k]
        cost += h[k] * d[k]
    if total <= 0.0:
        return -cost
    return r * pooled / total - cost


def projected_ascent(weights, unit_costs, reward, lower, upper, d0,
                     double armijo, double tol, int max_iters):
    """See ``sflgame._kernels.pure.projected_ascent``."""
    cdef const double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef const double[::1] h = np.ascontiguousarray(unit_costs, dtype=np.float64)
    cdef const double[::1] lo = np.ascontiguousarray(lower, dtype=np.float64)
    cdef const double[::1] hi = np.ascontiguousarray(upper, dtype=np.float64)
    cdef Py_ssize_t n = w.shape[0], k
    cdef double r = reward

    d_arr = np.clip(np.asarray(d0, dtype=np.float64), lower, upper)
    d_arr = np.ascontiguousarray(d_arr)
    cdef double[::1] d = d_arr
    grad_arr = np.empty(n, dtype=np.float64)
    cand_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] grad = grad_arr
    cdef double[::1] cand = cand_arr

    cdef double diameter = 0.0, diff
    for k in range(n):
        diff = hi[k] - lo[k]
        diameter += diff * diff
    diameter = sqrt(diameter)

    cdef double value = _objective(w, h, r, d)
    cdef double total, pooled, grad_norm, pg_norm, step, gain, move, gdotm, max_move
    cdef bint converged = False, accepted
    cdef int iters = 0, it
    for it in range(1, max_iters + 1):
        iters = it
        total = 0.0
        pooled = 0.0
        for k in range(n):
            total += d[k]
            pooled += w[k] * d[k]
        grad_norm = 0.0
        pg_norm = 0.0
        for k in range(n):
            if total > 0.0:
                grad[k] = r * (w[k] * total - pooled) / (total * total) - h[k]
            else:
                grad[k] = -h[k]
            grad_norm += grad[k] * grad[k]
            move = d[k] + grad[k]
            if move < lo[k]:
                move = lo[k]
            elif move > hi[k]:
                move = hi[k]
            move -= d[k]
            pg_norm += move * move
        grad_norm = sqrt(grad_norm)
        if sqrt(pg_norm) < tol:
            converged = True
            break

        step = diameter / (grad_norm + 1e-300)
        if step < 1.0:
            step = 1.0
        accepted = False
        while step > 1e-20:
            max_move = 0.0
            gdotm = 0.0
            for k in range(n):
                move = d[k] + step * grad[k]
                if move < lo[k]:
                    move = lo[k]
                elif move > hi[k]:
                    move = hi[k]
                cand[k] = move
                move -= d[k]
                gdotm += grad[k] * move
                if fabs(move) > max_move:
                    max_move = fabs(move)
            if max_move > 0.0:
                gain = _objective(w, h, r, cand) - value
                if gain >= armijo * gdotm:
                    for k in range(n):
                        d[k] = cand[k]
                    value += gain
                    accepted = True
                    break
            step *= 0.5
        if not accepted:
            converged = True
            break
    return d_arr, iters, converged
