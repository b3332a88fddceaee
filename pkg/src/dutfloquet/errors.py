"""Exception types raised by the solvers."""

from __future__ import annotations


class NumericFailure(RuntimeError):
    """A numerical routine (eigensolver, integrator) did not converge.

    ``metadata`` carries whatever context the caller had at hand, e.g. the
    matrix shape or the sweep parameter that failed.
    """

    def __init__(self, message: str, **metadata):
        self.metadata = dict(metadata)
        if metadata:
            detail = ", ".join(f"{k}={v!r}" for k, v in sorted(metadata.items()))
            message = f"{message} ({detail})"
        super().__init__(message)


class DegenerateChannelError(ArithmeticError):
    """A second-order energy denominator vanished for a non-resonant channel."""

    def __init__(self, branch: str, k: int, denominator: float):
        self.branch = branch
        self.k = k
        self.denominator = denominator
        super().__init__(
            f"{branch}-branch channel k={k} is resonant (denominator {denominator:.3e}); "
            "treat it as part of the model space"
        )


class ConsistencyError(RuntimeError):
    """Two independent routes to the same quantity disagree."""
