"""Stage 2: the model owner's joint incentive and cut-layer selection.

The owner anticipates the clients' equilibrium response, which is linear
in the incentive while no dataset cap binds.  Along that path the owner
objective is strictly concave in the incentive, so the interior optimum
has the closed form ``tau1 - d_req / X`` with ``X`` the aggregate response
slope; when caps bind, a golden-section search over the (still concave)
capped path takes over.  An exhaustive sweep over the integer cut-layer
range completes the backward induction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NoParticipation, NonInteriorRegime
from .followers import FollowerProblem, NashOutcome, closed_form_ne
from .model import ClientProfile, CutCostModel, SystemParams, flops_at_cut

GOLDEN_MAX_ITERS = 60
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
_TIE_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class LeaderProblem:
    """The owner's decision problem over incentive level and cut layer."""

    params: SystemParams
    clients: tuple[ClientProfile, ...]
    model: CutCostModel

    def __post_init__(self):
        object.__setattr__(self, "clients", tuple(self.clients))
        if len(self.clients) != self.params.n_clients:
            raise ValueError(
                f"got {len(self.clients)} clients, params.n_clients={self.params.n_clients}")
        for l_c in (self.params.l_min, self.params.l_max):
            flops_at_cut(self.model, l_c)  # raises NonPositiveCost if invalid

    def follower_at(self, r: float, l_c: float) -> FollowerProblem:
        return FollowerProblem.from_model(self.params, self.clients, self.model, r, l_c)


@dataclass(frozen=True)
class CutDiagnostic:
    """Best incentive and owner utility found for one cut layer."""

    l_c: int
    r_star: float
    u_mo: float


@dataclass(frozen=True, eq=False)
class StackelbergOutcome:
    """Owner optimum with the equilibrium it induces and per-layer diagnostics."""

    r_star: float
    l_c_star: int
    u_mo: float
    induced: NashOutcome
    per_cut_table: tuple[CutDiagnostic, ...]


def owner_utility(problem: LeaderProblem, r: float, l_c: float, d) -> float:
    """Owner payoff: data satisfaction plus offloading gain minus the incentive."""
    total = float(np.asarray(d, dtype=float).sum())
    satisfaction = problem.params.tau1 * math.log1p(total / problem.params.d_req)
    offload = problem.params.tau2 * flops_at_cut(problem.model, l_c) / problem.params.full_model_gflops
    return satisfaction + offload - r


def ne_coefficient(problem: LeaderProblem, l_c: float) -> np.ndarray:
    """Per-client slope of the equilibrium response ``d*_n = X_n * r``.

    Only valid when every client participates; raises ``NonInteriorRegime``
    otherwise, in which case the cap-aware search path must be used.
    """
    follower = problem.follower_at(problem.params.r_min, l_c)
    n = follower.n
    ratio_sum = float((follower.h / follower.psi).sum())
    x = (n - 1) / ratio_sum * (1.0 - follower.h * (n - 1) / (follower.psi * ratio_sum))
    if np.any(x <= 0):
        raise NonInteriorRegime(
            f"a client drops out at l_c={l_c}; the linear response slope is undefined")
    return x


def golden_section_maximize(fn, lo: float, hi: float, tol: float,
                            max_iters: int = GOLDEN_MAX_ITERS) -> tuple[float, float]:
    """Derivative-free maximization of a unimodal function on ``[lo, hi]``."""
    a, b = float(lo), float(hi)
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(max_iters):
        if b - a <= tol:
            break
        if fc < fd:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = fn(d)
        else:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = fn(c)
    x = 0.5 * (a + b)
    return x, fn(x)


def _ne_at(follower: FollowerProblem, r: float) -> NashOutcome:
    return closed_form_ne(follower.with_incentive(r))


def optimal_r_given_cut(problem: LeaderProblem, l_c: float,
                        method: str = "auto") -> tuple[float, float]:
    """Best incentive for a fixed cut layer, with the owner utility it earns.

    ``method="auto"`` uses the closed-form stationary point whenever the
    equilibrium stays uncapped over the whole incentive range and otherwise
    maximizes the capped path by golden-section search (refined against the
    interval endpoints and, when its equilibrium verifies as uncapped, the
    analytic stationary point).  ``"analytic"`` and ``"golden"`` force one
    route; forcing ``"analytic"`` on a capped instance raises
    ``NonInteriorRegime``.
    """
    if method not in ("auto", "analytic", "golden"):
        raise ValueError(f"unknown method {method!r}")
    params = problem.params
    r_lo, r_hi = params.r_min, params.r_max
    follower = problem.follower_at(r_lo, l_c)

    ne_hi = _ne_at(follower, r_hi)
    uncapped = ne_hi.method == "closed-form" and "cap" not in ne_hi.active

    def evaluate(r: float) -> float:
        return owner_utility(problem, r, l_c, _ne_at(follower, r).d_star)

    def analytic_r() -> float:
        # Slope of the aggregate equilibrium response, from any uncapped point.
        x_total = ne_hi.eta / r_hi if uncapped else _ne_at(follower, r_lo).eta / r_lo
        return min(max(params.tau1 - params.d_req / x_total, r_lo), r_hi)

    if method == "analytic" or (method == "auto" and uncapped):
        if not uncapped:
            raise NonInteriorRegime(
                f"dataset caps bind at l_c={l_c}; the analytic optimum does not apply")
        r_star = analytic_r()
        return r_star, evaluate(r_star)

    tol = 1e-9 * (r_hi - r_lo)
    x_gs, _ = golden_section_maximize(evaluate, r_lo, r_hi, tol)
    candidates = [x_gs, r_lo, r_hi]
    if method == "auto":
        r_hat = analytic_r()
        ne_hat = _ne_at(follower, r_hat)
        if ne_hat.method == "closed-form" and "cap" not in ne_hat.active:
            candidates.append(r_hat)
    best_r, best_u = None, -math.inf
    for r in candidates:
        u = evaluate(r)
        if u > best_u + _TIE_EPS or (best_r is not None and abs(u - best_u) <= _TIE_EPS and r < best_r):
            best_r, best_u = r, u
    return best_r, best_u


def stackelberg_search(problem: LeaderProblem) -> StackelbergOutcome:
    """Exhaustive sweep over integer cut layers, backward induction per layer.

    A layer whose follower game admits no participation scores ``-inf``.
    Ties in owner utility break toward the smaller cut layer.
    """
    params = problem.params
    table = []
    best = None
    for l_c in range(params.l_min, params.l_max + 1):
        try:
            r_star, u_mo = optimal_r_given_cut(problem, l_c)
        except NoParticipation:
            table.append(CutDiagnostic(l_c=l_c, r_star=math.nan, u_mo=-math.inf))
            continue
        table.append(CutDiagnostic(l_c=l_c, r_star=r_star, u_mo=u_mo))
        if best is None or u_mo > best.u_mo + _TIE_EPS:
            best = table[-1]
    if best is None:
        raise NoParticipation("no cut layer admits a participating equilibrium")
    induced = closed_form_ne(problem.follower_at(best.r_star, best.l_c))
    return StackelbergOutcome(
        r_star=best.r_star,
        l_c_star=best.l_c,
        u_mo=best.u_mo,
        induced=induced,
        per_cut_table=tuple(table),
    )


def round_r_to_integer(problem: LeaderProblem, outcome: StackelbergOutcome) -> StackelbergOutcome:
    """Snap the optimal incentive to the better of floor/ceil integers."""
    params = problem.params
    candidates = []
    for r in {math.floor(outcome.r_star), math.ceil(outcome.r_star)}:
        r = min(max(float(r), params.r_min), params.r_max)
        ne = closed_form_ne(problem.follower_at(r, outcome.l_c_star))
        candidates.append((owner_utility(problem, r, outcome.l_c_star, ne.d_star), -r, r, ne))
    u_mo, _, r_star, induced = max(candidates)
    return StackelbergOutcome(
        r_star=r_star,
        l_c_star=outcome.l_c_star,
        u_mo=u_mo,
        induced=induced,
        per_cut_table=outcome.per_cut_table,
    )
