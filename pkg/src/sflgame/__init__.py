"""Solvers for the split-federated-learning incentive game.

Clients decide how much data to contribute against an energy bill that
grows with the cut layer; the model owner decides the incentive pool and
the cut layer anticipating the clients' equilibrium.  The package exposes
the equilibrium solvers (closed form plus best-response iteration), the
owner's optimum, welfare/price-of-anarchy diagnostics, the cost-curve
fitting, the privacy lookup table, and a scenario runner CLI.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .errors import (
    ConfigError,
    DegenerateFit,
    InfeasibleBox,
    InsufficientData,
    NoParticipation,
    NonConvergence,
    NonInteriorRegime,
    NonPositiveCost,
    NonPositiveSample,
    NonPositiveWelfare,
    NoQualifyingCut,
    NotTabulated,
    SFLGameError,
    SolverError,
    ZeroAggregate,
)
from .followers import (
    FollowerProblem,
    NashOutcome,
    best_response,
    br_fixed_point,
    client_utility,
    closed_form_ne,
    marginal_utility,
)
from .leader import (
    LeaderProblem,
    StackelbergOutcome,
    ne_coefficient,
    optimal_r_given_cut,
    owner_utility,
    round_r_to_integer,
    stackelberg_search,
)
from .model import (
    ClientProfile,
    CutCostModel,
    EnergyBreakdown,
    SystemParams,
    comm_energy_fed,
    comm_energy_main,
    compute_latency,
    energy_coefficients,
    flops_at_cut,
    params_at_cut,
    total_energy,
)
from .privacy import PrivacyRecord, PrivacyTable, lookup, recommend_min_cut
from .regression import (
    FitReport,
    ProfileSample,
    fit_flops_linear,
    fit_params_exponential,
    fit_report,
    read_samples_csv,
)
from .scenarios import Scenario, list_scenarios, load_scenario, run_scenario
from .welfare import (
    PoAReport,
    WelfareProblem,
    price_of_anarchy,
    social_optimum,
    social_welfare,
)

__version__ = "0.1.0"
