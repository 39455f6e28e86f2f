"""Exception types shared across the toolkit.

CLI mapping: parameter/validation errors exit with code 2, solver and
runtime failures with code 1.
"""


class ToolkitError(Exception):
    """Base class for all betheclust errors."""


class ParameterError(ToolkitError, ValueError):
    """Invalid parameter combination (validation failure)."""


class DimensionError(ParameterError):
    """Mismatched vector/graph dimensions."""


class UnsupportedDistributionError(ParameterError):
    """Operation not defined for this weight-distribution variant."""


class PoleError(ParameterError):
    """Evaluation point coincides with a pole x^2 = omega_ij^2."""


class DenseCapExceededError(ParameterError):
    """Dense validation tool called above its directed-edge cap."""


class NotSignedGraphError(ParameterError):
    """Graph weights are not two-valued +-J0."""


class BetaOverflowError(ToolkitError, FloatingPointError):
    """beta*|J| too large for the direct Bethe-Hessian construction.

    Route the computation through ``regularized_laplacian`` instead.
    """


class DegreeTooSmallError(ToolkitError, RuntimeError):
    """Average degree c <= 1: the spin-glass transition equation has no root."""


class NoFerromagneticTransitionError(ToolkitError, RuntimeError):
    """c * E[tanh(beta J)] never crosses 1 for beta > 0."""


class SolverConvergenceError(ToolkitError, RuntimeError):
    """Eigen or outer iteration failed to converge."""

    def __init__(self, message, best_residual=None):
        super().__init__(message)
        self.best_residual = best_residual


class RootBracketError(ToolkitError, RuntimeError):
    """Root bracketing for f_t failed in an unexpected way."""
