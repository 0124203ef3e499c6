"""Stage 1: the clients' noncooperative data-contribution game.

Each client picks how many data items to contribute, trading its
proportional share of the incentive pool against the energy bill
``d_n * h_n + i_n``.  The game has a unique equilibrium with a closed
form over the active set; a projected cyclic best-response iteration
serves as the independent second route and as the fallback when dataset
caps bind.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import NoParticipation, NonConvergence, ZeroAggregate
from .model import ClientProfile, CutCostModel, SystemParams, energy_coefficients

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITERS = 10_000


def _readonly(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class FollowerProblem:
    """One instance of the contribution game at fixed incentive and cut layer.

    Holds the reduced per-client coefficients; ``from_model`` derives them
    from full system/client/cost-model descriptions.
    """

    r: float
    l_c: float
    h: np.ndarray
    i_fixed: np.ndarray
    psi: np.ndarray
    caps: np.ndarray
    offsets: np.ndarray
    params: SystemParams | None = field(default=None, repr=False)
    clients: tuple[ClientProfile, ...] | None = field(default=None, repr=False)
    model: CutCostModel | None = field(default=None, repr=False)

    def __post_init__(self):
        for name in ("h", "i_fixed", "psi", "caps", "offsets"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))
        if self.r <= 0:
            raise ValueError("incentive r must be strictly positive")
        n = len(self.h)
        if n < 2:
            raise ValueError("the contribution game needs at least 2 clients")
        for name in ("i_fixed", "psi", "caps", "offsets"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} length {len(getattr(self, name))} != {n}")
        if not np.all(self.h > 0):
            raise ValueError("all marginal energy costs h must be strictly positive")
        if not np.all(self.psi > 0):
            raise ValueError("all incentive weights psi must be strictly positive")
        if not np.all(self.caps > 0):
            raise ValueError("all dataset caps must be strictly positive")
        if self.params is not None and not (self.params.l_min <= self.l_c <= self.params.l_max):
            raise ValueError(f"l_c={self.l_c} outside [{self.params.l_min}, {self.params.l_max}]")

    @classmethod
    def from_model(cls, params: SystemParams, clients, model: CutCostModel,
                   r: float, l_c: float) -> "FollowerProblem":
        clients = tuple(clients)
        if len(clients) != params.n_clients:
            raise ValueError(f"got {len(clients)} clients, params.n_clients={params.n_clients}")
        coeffs = [energy_coefficients(params, c, model, l_c) for c in clients]
        return cls(
            r=r,
            l_c=l_c,
            h=[h for h, _ in coeffs],
            i_fixed=[i for _, i in coeffs],
            psi=[c.psi for c in clients],
            caps=[c.dataset_cap for c in clients],
            offsets=[c.offset for c in clients],
            params=params,
            clients=clients,
            model=model,
        )

    @property
    def n(self) -> int:
        return len(self.h)

    def with_incentive(self, r: float) -> "FollowerProblem":
        """Same game at a different incentive level (coefficients reused)."""
        return FollowerProblem(r=r, l_c=self.l_c, h=self.h, i_fixed=self.i_fixed,
                               psi=self.psi, caps=self.caps, offsets=self.offsets,
                               params=self.params, clients=self.clients, model=self.model)


@dataclass(frozen=True, eq=False)
class NashOutcome:
    """Equilibrium contributions with per-client diagnostics.

    ``active[n]`` is ``"interior"``, ``"zero"``, or ``"cap"``; ``method``
    records which route produced the profile.
    """

    d_star: np.ndarray
    eta: float
    active: tuple[str, ...]
    utilities: np.ndarray
    method: str
    iterations: int | None = None
    residual: float | None = None


def client_utility(problem: FollowerProblem, d, n: int) -> float:
    """Utility of client ``n`` at contribution profile ``d``."""
    d = np.asarray(d, dtype=float)
    total = d.sum()
    if total <= 0:
        raise ZeroAggregate("incentive share undefined at zero total contribution")
    share = problem.psi[n] * problem.r * d[n] / total
    return share - d[n] * problem.h[n] - problem.i_fixed[n] + problem.offsets[n]


def marginal_utility(problem: FollowerProblem, d, n: int) -> float:
    """First derivative of client ``n``'s utility in its own contribution."""
    d = np.asarray(d, dtype=float)
    total = d.sum()
    if total <= 0:
        raise ZeroAggregate("incentive share undefined at zero total contribution")
    others = total - d[n]
    return problem.psi[n] * problem.r * others / (total * total) - problem.h[n]


def best_response(problem: FollowerProblem, d_others_sum: float, n: int) -> float:
    """Best contribution of client ``n`` against a given total of the others."""
    if d_others_sum < 0:
        raise ValueError("d_others_sum must be nonnegative")
    gain = problem.psi[n] * problem.r / problem.h[n]
    if gain <= d_others_sum:
        return 0.0
    root = math.sqrt(d_others_sum)
    value = root * (math.sqrt(gain) - root)
    return min(max(value, 0.0), float(problem.caps[n]))


def _active_prefix(h: np.ndarray, psi: np.ndarray) -> tuple[np.ndarray, int]:
    """Participants of the uncapped equilibrium.

    Clients sorted by ascending cost-to-weight ratio participate as the
    longest prefix for which every member's closed-form contribution is
    positive; once the prefix test fails it fails for all longer prefixes.
    Returns the sort order and the prefix length (>= 2).
    """
    ratio = h / psi
    order = np.argsort(ratio, kind="stable")
    sorted_ratio = ratio[order]
    prefix_sums = np.cumsum(sorted_ratio)
    k = 2
    for size in range(3, len(h) + 1):
        if (size - 1) * sorted_ratio[size - 1] < prefix_sums[size - 1]:
            k = size
        else:
            break
    return order, k


def _utilities(problem: FollowerProblem, d: np.ndarray) -> np.ndarray:
    total = d.sum()
    shares = problem.psi * problem.r * d / total
    return shares - d * problem.h - problem.i_fixed + problem.offsets


def _flags(d: np.ndarray, caps: np.ndarray) -> tuple[str, ...]:
    out = []
    for value, cap in zip(d, caps):
        if value <= 0.0:
            out.append("zero")
        elif value >= cap:
            out.append("cap")
        else:
            out.append("interior")
    return tuple(out)


def closed_form_ne(problem: FollowerProblem) -> NashOutcome:
    """Equilibrium of the contribution game via its closed-form expression.

    Non-participating clients are removed by the active-prefix rule; if any
    closed-form contribution exceeds its dataset cap the projected
    best-response iteration takes over.
    """
    order, k = _active_prefix(problem.h, problem.psi)
    active_idx = order[:k]
    h = problem.h[active_idx]
    psi = problem.psi[active_idx]
    ratio_sum = float((h / psi).sum())
    eta = (k - 1) * problem.r / ratio_sum
    d_active = eta * (1.0 - h * (k - 1) / (psi * ratio_sum))

    if np.any(d_active <= 0):
        raise NoParticipation("active-set reduction removed every client")
    if np.any(d_active > problem.caps[active_idx]):
        return br_fixed_point(problem)

    d = np.zeros(problem.n)
    d[active_idx] = d_active
    return NashOutcome(
        d_star=d,
        eta=float(d.sum()),
        active=_flags(d, problem.caps),
        utilities=_utilities(problem, d),
        method="closed-form",
    )


def _start_point(problem: FollowerProblem) -> np.ndarray:
    # Sub-equilibrium start: keeping the initial totals below every
    # client's participation threshold psi*r/h prevents the iteration from
    # parking weak clients at zero on the very first sweep.
    scale = float(np.min(problem.psi * problem.r / problem.h)) / (2.0 * problem.n)
    start = min(problem.params.d_req / problem.n if problem.params is not None else math.inf,
                scale)
    return np.minimum(0.5 * problem.caps, start)


def _aggregate_restart(problem: FollowerProblem) -> np.ndarray:
    """Globalization point for the sweep: bisect the aggregate-consistency gap.

    At total contribution ``t`` the first-order-condition response of
    client ``n`` is ``clip(t - t^2 h_n/(psi_n r), 0, cap_n)``; the
    equilibrium total is the root of (sum of responses) - t, bracketed
    between 0 and a total beyond every participation threshold.
    """
    gain = problem.psi * problem.r / problem.h

    def excess(t):
        return float(np.clip(t - t * t / gain, 0.0, problem.caps).sum()) - t

    lo = float(np.min(gain)) * 1e-12
    hi = max(float(np.max(gain)), float(problem.caps.sum())) + 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if excess(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    t = 0.5 * (lo + hi)
    return np.clip(t - t * t / gain, 0.0, problem.caps)


def br_fixed_point(problem: FollowerProblem, tol: float = DEFAULT_TOL,
                   max_iters: int = DEFAULT_MAX_ITERS) -> NashOutcome:
    """Equilibrium via damped cyclic best-response iteration.

    Starts from a deterministic interior point.  Best-response dynamics
    are only locally convergent in this game (high-asymmetry instances
    cycle from afar), so if the sweep has not converged after part of its
    budget it restarts once from the aggregate-consistency bisection
    point, where the damped sweep is provably contracting.  The returned
    profile always satisfies the best-response residual below ``tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    budget = min(1000, max_iters // 2) if max_iters >= 2 else max_iters
    d, sweeps, residual = _kernels.br_iterate(
        problem.psi, problem.h, problem.caps, problem.r, _start_point(problem),
        tol, budget)
    if residual >= tol:
        d, extra, residual = _kernels.br_iterate(
            problem.psi, problem.h, problem.caps, problem.r, _aggregate_restart(problem),
            tol, max_iters - budget)
        sweeps += extra
    if residual >= tol:
        raise NonConvergence(
            f"best-response iteration did not converge in {sweeps} sweeps "
            f"(residual {residual:.3e})",
            last_iterate=d, residual=residual)
    if d.sum() <= 0:
        raise NoParticipation("best-response iteration collapsed to zero contributions")
    return NashOutcome(
        d_star=d,
        eta=float(d.sum()),
        active=_flags(d, problem.caps),
        utilities=_utilities(problem, d),
        method="fixed-point",
        iterations=sweeps,
        residual=residual,
    )
