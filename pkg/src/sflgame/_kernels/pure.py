"""Pure-Python/numpy fallback for the hot solver loops.

Mirrors the semantics of the compiled backend exactly: same iteration
order, same update rules, same stopping tests, so both backends converge
to the same points (cross-checked in the test suite).
"""

from __future__ import annotations

import math

import numpy as np

BACKEND = "pure"


def br_iterate(weights, unit_costs, caps, reward, d0, tol, max_iters):
    """Damped cyclic best-response sweep for the contribution game.

    One sweep visits each client in turn and moves it toward its best
    response against the others' current total, with step ``1/(1+|s|)``
    where ``s`` is the local slope of the best-response curve.  Plain
    (undamped) iteration provably cycles on high-asymmetry instances where
    that slope exceeds one; the damped map is locally stable at the
    equilibrium and has the same fixed points.  Stops when the largest
    best-response gap ``|BR_k - d_k|`` seen in a sweep drops below
    ``tol``; a final exact best-response pass then lands drop-outs on
    exact zeros and capped clients on exact caps.

    Returns ``(d, sweeps, residual)``; the caller decides whether a
    residual at or above ``tol`` after ``max_iters`` sweeps is an error
    (convergence is local, so a far-off start may need a restart).
    """
    n = len(weights)
    d = [float(x) for x in d0]
    gain = [float(weights[k]) * reward / float(unit_costs[k]) for k in range(n)]
    cap = [float(caps[k]) for k in range(n)]
    sqrt = math.sqrt

    residual = math.inf
    sweeps = 0
    for sweeps in range(1, max_iters + 1):
        total = 0.0
        for k in range(n):
            total += d[k]
        residual = 0.0
        for k in range(n):
            others = total - d[k]
            if others <= 0.0:
                # limit of the interior branch; sup is not attained, hold
                br, step = 0.0, 0.0
            elif gain[k] <= others:
                br, step = 0.0, 0.5
            else:
                root = sqrt(others)
                br = root * (sqrt(gain[k]) - root)
                slope = sqrt(gain[k] / others) * 0.5 - 1.0
                step = 1.0 / (1.0 + (slope if slope > 0.0 else -slope))
                if br > cap[k]:
                    br = cap[k]
            diff = br - d[k]
            change = diff if diff >= 0.0 else -diff
            if change > residual:
                residual = change
            new = d[k] + step * diff
            total += new - d[k]
            d[k] = new
        if residual < tol:
            break

    # finishing pass: one exact Jacobi best-response step at the converged
    # profile, so drop-outs land on exact zeros and caps on exact caps
    if residual < tol:
        total = 0.0
        for k in range(n):
            total += d[k]
        out = [0.0] * n
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
        d = out
    return np.array(d), sweeps, residual


def _ascent_objective(weights, unit_costs, reward, d):
    total = d.sum()
    if total <= 0.0:
        return -float(unit_costs @ d)
    return reward * float(weights @ d) / total - float(unit_costs @ d)


def projected_ascent(weights, unit_costs, reward, lower, upper, d0,
                     armijo, tol, max_iters):
    """Projected gradient ascent of aggregate welfare over a box.

    Maximises ``reward * <weights, d>/sum(d) - <unit_costs, d>`` over
    ``lower <= d <= upper`` with backtracking (halving) line search.
    Convergence is declared when the projected-gradient norm falls below
    ``tol``.  Returns ``(d, iters, converged)``.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    d = np.clip(np.asarray(d0, dtype=float), lower, upper)
    diameter = float(np.linalg.norm(upper - lower))
    value = _ascent_objective(weights, unit_costs, reward, d)

    converged = False
    iters = 0
    for iters in range(1, max_iters + 1):
        total = d.sum()
        if total > 0.0:
            pooled = float(weights @ d)
            grad = reward * (weights * total - pooled) / (total * total) - unit_costs
        else:
            grad = -unit_costs
        grad_norm = float(np.linalg.norm(grad))
        projected = np.clip(d + grad, lower, upper)
        if float(np.linalg.norm(d - projected)) < tol:
            converged = True
            break

        step = max(1.0, diameter / (grad_norm + 1e-300))
        accepted = False
        while step > 1e-20:
            candidate = np.clip(d + step * grad, lower, upper)
            move = candidate - d
            if float(np.abs(move).max()) > 0.0:
                gain = _ascent_objective(weights, unit_costs, reward, candidate) - value
                if gain >= armijo * float(grad @ move):
                    d = candidate
                    value += gain
                    accepted = True
                    break
            step *= 0.5
        if not accepted:
            converged = True  # no improving feasible step remains
            break
    return d, iters, converged
