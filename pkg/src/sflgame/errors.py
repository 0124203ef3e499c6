"""Exception types raised by the solvers, fitters, and loaders.

Two broad families matter for the CLI exit codes: ``ConfigError`` (and its
subclasses) signal bad input and map to exit code 2, while ``SolverError``
subclasses signal that a well-formed problem has no usable answer and map
to exit code 3.
"""


class SFLGameError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(SFLGameError):
    """A scenario file, parameter set, or input table failed validation."""


class SolverError(SFLGameError):
    """A solver could not produce a result for a well-formed problem."""


class NonPositiveCost(SolverError):
    """The fitted workload model predicts a non-positive cost at a cut layer.

    Signals an invalid pairing of regression coefficients and layer index.
    """


class InsufficientData(ConfigError):
    """Too few usable samples to fit a model."""


class DegenerateFit(ConfigError):
    """All samples share one abscissa; the fit is underdetermined."""


class NonPositiveSample(ConfigError):
    """A measurement that must be positive (log-space fit) is not."""


class ZeroAggregate(SolverError):
    """The proportional incentive share is undefined at zero total contribution."""


class NoParticipation(SolverError):
    """Every client drops to zero contribution; no equilibrium with activity."""


class NonConvergence(SolverError):
    """Iterative solver exhausted its iteration budget.

    Carries the last iterate and the final residual for diagnosis.
    """

    def __init__(self, message, last_iterate=None, residual=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual


class NonInteriorRegime(SolverError):
    """A closed-form expression was requested outside its interior regime."""


class InfeasibleBox(SolverError):
    """The welfare feasibility box is empty (a lower bound exceeds its upper bound)."""


class NonPositiveWelfare(SolverError):
    """Equilibrium welfare is non-positive, so the efficiency ratio is meaningless.

    Raising the per-client utility offset makes both welfares positive.
    """


class NotTabulated(ConfigError):
    """The requested (cut layer, noise level) pair is not in the privacy table."""


class NoQualifyingCut(SolverError):
    """No tabulated cut layer meets the requested leakage threshold."""
