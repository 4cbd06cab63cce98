"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of a formula."""


class SingularCovariance(ValueError):
    """The transmit covariance is not invertible, so the echo channel
    cannot be fully estimated."""


class EmptyTargets(ValueError):
    """A secrecy rate was requested with no sensing targets."""


class BudgetExceeded(ValueError):
    """Communication and sensing power already exceeds the total budget."""


class SingularDesign(ValueError):
    """The probing matrix of a least-squares estimate is ill-conditioned."""


class Infeasible(RuntimeError):
    """No strictly feasible point exists for an optimization problem."""


class CurvatureOverflow(RuntimeError):
    """Backtracking on the surrogate curvature did not find an ascent step."""
