"""Exception hierarchy shared by every sislab module."""


class SislabError(Exception):
    """Base class for all sislab failures."""


class ValidationError(SislabError, ValueError):
    """Bad input: wrong shapes, non-positive coefficients, bad config."""


class HypothesisError(ValidationError):
    """A theorem hypothesis needed by the requested computation does not hold."""


class SolverError(SislabError, RuntimeError):
    """A numerical solver failed to deliver a result."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class ConvergenceError(SolverError):
    """Iteration cap reached or Newton stagnated."""


class PositivityError(SolverError):
    """A time step kept producing negative densities down to ``dt_min``."""

    def __init__(self, message, node=None, term=None, **kwargs):
        super().__init__(message, **kwargs)
        self.node = node
        self.term = term


class ResolutionError(SolverError):
    """A steady profile is too steep to be trusted on the current grid."""

    def __init__(self, message, suggested_n_cells=None, **kwargs):
        super().__init__(message, **kwargs)
        self.suggested_n_cells = suggested_n_cells
