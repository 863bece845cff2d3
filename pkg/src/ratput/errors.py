"""Shared exception types."""


class GridDomainError(ValueError):
    """A query point lies outside the surface's grid domain."""


class SolverError(RuntimeError):
    """A numerical solve failed (breakdown or non-convergence).

    The message identifies the offending time step and the residual so
    failures in long backward marches are diagnosable.
    """
