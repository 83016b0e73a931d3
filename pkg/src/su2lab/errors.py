"""Exception types shared across the package."""


class ProfileError(ValueError):
    """A radial profile violates a construction contract (e.g. K(0) != 1)."""


class DegenerateFitError(ValueError):
    """A decay fit was requested on data that carries no signal (all zeros)."""


class ConfigError(ValueError):
    """A run configuration names an unknown key, field, or value."""


class AccuracyError(RuntimeError):
    """Adaptive quadrature could not meet its tolerance.

    Carries the best available partial result in ``partial``.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class ConvergenceError(RuntimeError):
    """An iterative solver hit its iteration cap before reaching tolerance.

    ``best`` holds the best-so-far values, ``history`` the per-iteration
    progress record (residuals), so callers can inspect what was achieved.
    """

    def __init__(self, message, best=None, history=None):
        super().__init__(message)
        self.best = best
        self.history = history
