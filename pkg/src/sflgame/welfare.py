"""Centralized social optimum and the price of anarchy.

Social welfare sums the client utilities over a feasibility box whose
default lower bound ``d_req / N`` per client keeps the aggregate
contribution above the accuracy requirement.  The optimum is found by
multi-start projected gradient ascent (the welfare surface is smooth but
not concave in general); the price of anarchy divides it by the welfare
of the equilibrium projected onto the same box.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import InfeasibleBox, NonPositiveWelfare, SolverError, ZeroAggregate
from .followers import FollowerProblem, closed_form_ne

ASCENT_ARMIJO = 1e-4
ASCENT_TOL = 1e-8
ASCENT_MAX_ITERS = 5_000
N_STARTS = 16


@dataclass(frozen=True, eq=False)
class WelfareProblem:
    """A contribution game plus the feasibility box for central planning."""

    follower: FollowerProblem
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lower", np.array(self.lower, dtype=float))
        object.__setattr__(self, "upper", np.array(self.upper, dtype=float))
        n = self.follower.n
        if len(self.lower) != n or len(self.upper) != n:
            raise ValueError("bound lengths must match the number of clients")
        if np.any(self.lower < 0):
            raise ValueError("lower bounds must be nonnegative")
        if np.any(self.lower > self.upper):
            raise InfeasibleBox("a lower bound exceeds its upper bound")
        self.lower.flags.writeable = False
        self.upper.flags.writeable = False

    @classmethod
    def from_follower(cls, follower: FollowerProblem, lower=None, upper=None) -> "WelfareProblem":
        """Default box: ``d_req / N`` below (when known), dataset caps above."""
        if lower is None:
            if follower.params is None:
                raise ValueError("lower bounds required when the problem has no system params")
            lower = np.full(follower.n, follower.params.d_req / follower.n)
        if upper is None:
            upper = follower.caps
        return cls(follower=follower, lower=lower, upper=upper)


@dataclass(frozen=True, eq=False)
class PoAReport:
    """Efficiency report: optimal versus equilibrium welfare."""

    welfare_opt: float
    welfare_ne: float
    poa: float
    d_opt: np.ndarray
    d_ne: np.ndarray
    d_ne_raw: np.ndarray


def social_welfare(problem: WelfareProblem, d) -> float:
    """Sum of client utilities at profile ``d``."""
    fp = problem.follower
    d = np.asarray(d, dtype=float)
    total = d.sum()
    if total <= 0:
        raise ZeroAggregate("incentive share undefined at zero total contribution")
    incentive = fp.r * float(fp.psi @ d) / total
    return incentive - float(fp.h @ d) + float((fp.offsets - fp.i_fixed).sum())


def _starts(problem: WelfareProblem, seed: int) -> np.ndarray:
    fp = problem.follower
    lower, upper = problem.lower, problem.upper
    n = fp.n
    points = [lower, upper, 0.5 * (lower + upper)]
    try:
        ne = closed_form_ne(fp)
        points.append(np.clip(ne.d_star, lower, upper))
    except SolverError:
        pass
    if n <= 3:  # all box corners
        for mask in range(1, 2 ** n - 1):
            bits = np.array([(mask >> k) & 1 for k in range(n)], dtype=bool)
            points.append(np.where(bits, upper, lower))
    rng = np.random.default_rng(seed)
    while len(points) < N_STARTS:
        points.append(lower + rng.random(n) * (upper - lower))
    return np.array(points[:N_STARTS])


def social_optimum(problem: WelfareProblem, seed: int = 0) -> tuple[np.ndarray, float]:
    """Welfare-maximizing profile over the box, by multi-start projected ascent.

    Starts are deterministic for a given seed: the box corners (all of them
    for up to 3 clients), the centroid, the projected equilibrium, and
    seeded uniform draws.  The best final point wins; ties break toward the
    earlier start.
    """
    fp = problem.follower
    best_d, best_value = None, -np.inf
    for start in _starts(problem, seed):
        d, _, _ = _kernels.projected_ascent(
            fp.psi, fp.h, fp.r, problem.lower, problem.upper, start,
            ASCENT_ARMIJO, ASCENT_TOL, ASCENT_MAX_ITERS)
        value = fp.r * float(fp.psi @ d) / d.sum() - float(fp.h @ d) if d.sum() > 0 else -float(fp.h @ d)
        if value > best_value:
            best_d, best_value = d, value
    return best_d, social_welfare(problem, best_d)


def price_of_anarchy(problem: WelfareProblem, seed: int = 0) -> PoAReport:
    """Ratio of optimal to equilibrium welfare over the same feasible box.

    The equilibrium profile is projected onto the box before its welfare is
    evaluated; both welfares share the same utility offsets.
    """
    ne = closed_form_ne(problem.follower)
    d_ne_raw = ne.d_star
    d_ne = np.clip(d_ne_raw, problem.lower, problem.upper)
    welfare_ne = social_welfare(problem, d_ne)
    if welfare_ne <= 0:
        raise NonPositiveWelfare(
            f"equilibrium welfare {welfare_ne:.6g} is not positive; raise the "
            "client utility offsets to make the ratio meaningful")
    d_opt, welfare_opt = social_optimum(problem, seed=seed)
    return PoAReport(
        welfare_opt=welfare_opt,
        welfare_ne=welfare_ne,
        poa=welfare_opt / welfare_ne,
        d_opt=d_opt,
        d_ne=d_ne,
        d_ne_raw=d_ne_raw,
    )
