"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where a function is defined."""


class AccuracyError(ArithmeticError):
    """No evaluation regime reached the requested accuracy."""


class SingularDesignError(ArithmeticError):
    """The information matrix of a design is numerically singular."""


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before meeting its tolerance.

    The best iterate found so far is attached as ``result`` so callers can
    still report or write it.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
