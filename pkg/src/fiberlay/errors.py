"""Exception types shared across the fiberlay package."""

from __future__ import annotations

__all__ = [
    "FiberlayError",
    "ConfigError",
    "PoleSingularity",
    "MissingDerivatives",
    "NumericalInconsistency",
    "StepFailure",
    "ChartExit",
    "NonIntegrable",
    "InsufficientSignal",
    "BasisTooSmall",
]


class FiberlayError(Exception):
    """Base class for all fiberlay-specific errors."""


class ConfigError(FiberlayError, ValueError):
    """Invalid configuration value (bad dimension, nonpositive step, ...)."""


class PoleSingularity(FiberlayError):
    """A spherical chart was evaluated too close to a coordinate pole.

    The local chart degenerates where any interior angle approaches 0 or pi;
    the metric factors blow up there, so the chart refuses to represent such
    points rather than return ill-conditioned values.
    """

    def __init__(self, j: int, theta_j: float):
        self.j = j
        self.theta_j = theta_j
        super().__init__(
            f"angle theta_{j} = {theta_j!r} is within pole tolerance of {{0, pi}}"
        )


class MissingDerivatives(FiberlayError):
    """An operation needed derivative data the supplied function lacks."""


class NumericalInconsistency(FiberlayError):
    """Two independent evaluation routes disagreed beyond tolerance."""


class StepFailure(FiberlayError):
    """A time step produced a non-finite state.

    Carries the step index and (for simulations) leaves the partial
    trajectory in the caller's hands.
    """

    def __init__(self, step: int, message: str = "non-finite state"):
        self.step = step
        super().__init__(f"step {step}: {message}")


class ChartExit(FiberlayError):
    """A local-coordinate step left the valid chart region.

    Raised by :func:`fiberlay.dynamics.step_local` when an interior angle
    lands within pole tolerance of {0, pi}.  Ensemble drivers catch this and
    fall back to one global-chart step.
    """

    def __init__(self, j: int, theta_j: float, step: int | None = None):
        self.j = j
        self.theta_j = theta_j
        self.step = step
        super().__init__(
            f"theta_{j} = {theta_j!r} left the chart interior"
            + (f" at step {step}" if step is not None else "")
        )


class NonIntegrable(FiberlayError):
    """exp(-Phi) failed the integrability tail test."""


class InsufficientSignal(FiberlayError):
    """A decay fit had too few usable points above the noise floor."""


class BasisTooSmall(FiberlayError):
    """A Galerkin basis was too small to produce a meaningful estimate."""
