"""Exception types raised across the package."""

import numpy as np


class DimensionError(ValueError):
    """Shapes of the operands do not agree."""


class CapacityError(MemoryError):
    """A dense materialization would exceed the configured entry cap."""


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    """Cholesky factorization hit a non-positive pivot.

    ``pivot`` is the zero-based index of the failing leading minor.
    """

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class DegenerateAppendError(np.linalg.LinAlgError):
    """Appending a row/column to a Cholesky factor gave a non-positive Schur complement."""


class ConditioningError(np.linalg.LinAlgError):
    """A Gram matrix could not be factorized for a regression fit."""

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class RankError(np.linalg.LinAlgError):
    """Dense least squares hit a singular Gram matrix."""


class DivergenceError(ArithmeticError):
    """Time integration produced a non-finite state."""

    def __init__(self, message, step, states=None):
        super().__init__(message)
        self.step = step
        self.states = states
