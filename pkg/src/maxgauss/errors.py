"""Exception hierarchy shared by every module."""


class MaxGaussError(Exception):
    """Base class for library errors."""


class DomainError(MaxGaussError, ValueError):
    """An argument lies outside the region where the quantity is defined."""


class ShapeError(MaxGaussError, ValueError):
    """An array argument has the wrong shape."""


class InfeasibleError(MaxGaussError):
    """No admissible point satisfies the requested constraint.

    ``grid_minimum`` carries the best value of the constrained quantity seen
    during the grid scan, so callers can report how far off the request was.
    """

    def __init__(self, message, grid_minimum=None):
        super().__init__(message)
        self.grid_minimum = grid_minimum
