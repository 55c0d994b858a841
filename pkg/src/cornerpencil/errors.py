"""Exception hierarchy shared by all modules.

Every error carries an ``exit_code`` used by the command line front end:
1 for input problems, 3 for numerical failures.
"""


class PencilError(Exception):
    """Base class for all library errors."""

    exit_code = 3


class InputError(PencilError, ValueError):
    """Invalid user input (bad configuration, violated precondition)."""

    exit_code = 1


class DomainError(InputError):
    """Evaluation point outside the domain of a function."""


class ConfigError(InputError):
    """Configuration file failed schema or invariant validation."""


class GeometryError(InputError):
    """Cutoff supports or nonlocal shifts are geometrically inconsistent."""


class StripViolationError(InputError):
    """An eigenvalue lies on (or numerically touches) a weight-strip edge."""

    def __init__(self, message, offending=None):
        super().__init__(message)
        self.offending = offending


class CapabilityError(PencilError):
    """Requested configuration is outside what the implementation supports."""

    exit_code = 1


class EvaluationError(PencilError):
    """A function produced a non-finite value."""


class ContourDegeneracyError(PencilError):
    """The argument principle could not be applied on a contour."""


class RefinementError(PencilError):
    """Newton refinement of a root failed to converge."""


class ConditioningError(PencilError):
    """A linear system is too ill-conditioned to decide rank reliably."""


class MultiplicityError(PencilError):
    """Kernel dimension differs from the expected one."""


class NormalizationError(PencilError):
    """Biorthogonal normalization failed (singular Gram matrix)."""


class ResonanceError(PencilError):
    """A resonant configuration was met without resonant mode enabled."""

    exit_code = 1


class ResolutionError(PencilError):
    """Quadrature or sampling does not resolve the required region."""


class IllPosedFitError(PencilError):
    """Least-squares fit is too ill-conditioned."""


class ClosureError(PencilError):
    """A shifted stencil leaves the grid and no closure data was given."""

    exit_code = 1


class SolverError(PencilError):
    """Discrete linear system is singular or the solve is inaccurate."""

    def __init__(self, message, condition_estimate=None):
        super().__init__(message)
        self.condition_estimate = condition_estimate
