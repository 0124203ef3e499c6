"""Domain types and the deterministic energy/cost arithmetic.

Every quantity is stored in a fixed unit: frequencies in Hz, rates in
bit/s, payload sizes in bits, powers in W, workloads in GFLOPs, and
parameter counts in Mparams.  The two regression-backed cost curves are

* client-side workload, linear in the cut layer: ``a * l_c + b`` (GFLOPs),
* client-side model size, exponential in the cut layer:
  ``c * exp(d * l_c)`` (Mparams),

and the per-round energy bill of a client flattens into the affine form
``e_total = d_n * h_coeff + i_coeff`` where ``d_n`` is the number of
contributed data items.  ``h_coeff`` (J per item) and ``i_coeff`` (J) are
the reduced coefficients both game stages consume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import NonPositiveCost

GIGA = 1.0e9
MEGA = 1.0e6


@dataclass(frozen=True)
class SystemParams:
    """Global constants of one split-training deployment.

    ``tau1``/``tau2`` weigh the owner's data-satisfaction and
    load-offloading terms; ``r_min``..``r_max`` and ``l_min``..``l_max``
    bound the owner's incentive and cut-layer choices.
    """

    n_clients: int
    minibatches_per_epoch: int
    epochs: int
    rounds: int
    d_req: float
    bits_per_param: float
    smashed_size: float
    gradient_size: float
    full_model_gflops: float
    computing_intensity: float
    tau1: float
    tau2: float
    r_min: float
    r_max: float
    l_min: int
    l_max: int

    def __post_init__(self):
        if self.n_clients < 2:
            raise ValueError("n_clients must be at least 2 (no game with a single client)")
        for name in ("minibatches_per_epoch", "epochs", "rounds"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.d_req <= 0:
            raise ValueError("d_req must be positive")
        for name in ("bits_per_param", "smashed_size", "gradient_size",
                     "full_model_gflops", "computing_intensity"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.tau1 < 0 or self.tau2 < 0:
            raise ValueError("tau1 and tau2 must be nonnegative")
        if not (0 < self.r_min <= self.r_max):
            raise ValueError("incentive bounds must satisfy 0 < r_min <= r_max")
        if not (1 <= self.l_min <= self.l_max):
            raise ValueError("cut-layer bounds must satisfy 1 <= l_min <= l_max")


@dataclass(frozen=True)
class ClientProfile:
    """Per-client hardware, link, and preference constants.

    ``psi`` scales how much the client values incentives; ``offset`` is a
    constant baseline added to its utility and never affects equilibria.
    """

    cpu_freq: float
    psi: float
    dataset_cap: float
    p_compute: float
    p_tx: float
    p_rx: float
    rate_up_main: float
    rate_down_main: float
    rate_up_fed: float
    rate_down_fed: float
    offset: float = 0.0

    def __post_init__(self):
        positive = ("cpu_freq", "psi", "dataset_cap", "p_compute", "p_tx", "p_rx",
                    "rate_up_main", "rate_down_main", "rate_up_fed", "rate_down_fed")
        for name in positive:
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")


@dataclass(frozen=True)
class CutCostModel:
    """Regression coefficients for workload and model size versus cut layer."""

    flops_slope: float
    flops_intercept: float
    params_scale: float
    params_rate: float

    def __post_init__(self):
        if self.flops_slope <= 0:
            raise ValueError("flops_slope must be positive (workload grows with layers)")
        if self.params_scale <= 0:
            raise ValueError("params_scale must be positive")
        if self.params_rate < 0:
            raise ValueError("params_rate must be nonnegative")


@dataclass(frozen=True)
class EnergyBreakdown:
    """Per-client energy bill over a full training run, itemised.

    Latency fields are one-shot times: ``t_compute`` for one mini-batch of
    forward/backward work, the ``t_*`` pairs for one payload exchange with
    the main and fed servers.  Energy fields aggregate over all epochs and
    rounds, and ``e_total == d_n * h_coeff + i_coeff`` holds exactly.
    """

    t_compute: float
    t_up_main: float
    t_down_main: float
    t_up_fed: float
    t_down_fed: float
    e_compute: float
    e_com_main: float
    e_com_fed: float
    e_total: float
    h_coeff: float
    i_coeff: float


def flops_at_cut(model: CutCostModel, l_c: float) -> float:
    """Client-side workload in GFLOPs for one data sample at cut layer ``l_c``."""
    value = model.flops_slope * l_c + model.flops_intercept
    if value <= 0:
        raise NonPositiveCost(
            f"workload model predicts {value:.6g} GFLOPs at l_c={l_c}; "
            "coefficients and layer index are inconsistent"
        )
    return value


def params_at_cut(model: CutCostModel, l_c: float) -> float:
    """Client-side model size in Mparams at cut layer ``l_c``."""
    return model.params_scale * math.exp(model.params_rate * l_c)


def compute_latency(params: SystemParams, client: ClientProfile,
                    model: CutCostModel, d_n: float, l_c: float) -> float:
    """Seconds to process one mini-batch of the client-side model.

    The mini-batch holds ``d_n / M`` samples, each costing the cut-layer
    workload, processed at ``cpu_freq * computing_intensity`` FLOPs/s.
    """
    flops = flops_at_cut(model, l_c) * GIGA
    return d_n * flops / (params.minibatches_per_epoch * client.cpu_freq
                          * params.computing_intensity)


def comm_energy_main(params: SystemParams, client: ClientProfile) -> float:
    """Joules for one activation upload plus one gradient download."""
    return (client.p_tx * params.smashed_size / client.rate_up_main
            + client.p_rx * params.gradient_size / client.rate_down_main)


def comm_energy_fed(params: SystemParams, client: ClientProfile,
                    model: CutCostModel, l_c: float) -> float:
    """Joules for one client-side model upload plus one global-model download."""
    payload_bits = params.bits_per_param * params_at_cut(model, l_c) * MEGA
    return payload_bits * (client.p_tx / client.rate_up_fed
                           + client.p_rx / client.rate_down_fed)


def energy_coefficients(params: SystemParams, client: ClientProfile,
                        model: CutCostModel, l_c: float) -> tuple[float, float]:
    """Reduced coefficients ``(h_coeff, i_coeff)`` of the affine energy bill.

    ``h_coeff`` is the marginal energy per contributed data item and
    ``i_coeff`` the contribution-independent energy, both over the full run
    of ``rounds`` rounds with ``epochs`` epochs each.
    """
    per_item_rate = params.epochs * client.p_compute / (client.cpu_freq
                                                        * params.computing_intensity)
    h = params.rounds * flops_at_cut(model, l_c) * GIGA * per_item_rate
    per_epoch_com = params.epochs * params.minibatches_per_epoch * comm_energy_main(params, client)
    i = params.rounds * (per_epoch_com + comm_energy_fed(params, client, model, l_c))
    return h, i


def total_energy(params: SystemParams, client: ClientProfile,
                 model: CutCostModel, l_c: float, d_n: float) -> EnergyBreakdown:
    """Itemised energy bill for contributing ``d_n`` data items."""
    if d_n < 0:
        raise ValueError("d_n must be nonnegative")
    t_compute = compute_latency(params, client, model, d_n, l_c)
    t_up_main = params.smashed_size / client.rate_up_main
    t_down_main = params.gradient_size / client.rate_down_main
    payload_bits = params.bits_per_param * params_at_cut(model, l_c) * MEGA
    t_up_fed = payload_bits / client.rate_up_fed
    t_down_fed = payload_bits / client.rate_down_fed

    per_round = params.epochs * params.minibatches_per_epoch
    e_compute = params.rounds * per_round * client.p_compute * t_compute
    e_com_main = params.rounds * per_round * comm_energy_main(params, client)
    e_com_fed = params.rounds * comm_energy_fed(params, client, model, l_c)
    e_total = e_compute + e_com_main + e_com_fed

    h, i = energy_coefficients(params, client, model, l_c)
    return EnergyBreakdown(
        t_compute=t_compute,
        t_up_main=t_up_main,
        t_down_main=t_down_main,
        t_up_fed=t_up_fed,
        t_down_fed=t_down_fed,
        e_compute=e_compute,
        e_com_main=e_com_main,
        e_com_fed=e_com_fed,
        e_total=e_total,
        h_coeff=h,
        i_coeff=i,
    )
