"""Covariance steering with output feedback."""

from ._core import (
    AugmentedMoments,
    CsofError,
    DimensionError,
    FilterSchedule,
    FilterStage,
    IterationRecord,
    LegacyStage,
    McReport,
    McStage,
    NumericError,
    ParseError,
    Policy,
    PreconditionError,
    Problem,
    Result,
    SingularityError,
    Trajectory,
    ValidationError,
    design_filter,
    legacy_recursion,
    monte_carlo,
    propagate,
    solve,
)

__all__ = [
    "AugmentedMoments",
    "CsofError",
    "DimensionError",
    "FilterSchedule",
    "FilterStage",
    "IterationRecord",
    "LegacyStage",
    "McReport",
    "McStage",
    "NumericError",
    "ParseError",
    "Policy",
    "PreconditionError",
    "Problem",
    "Result",
    "SingularityError",
    "Trajectory",
    "ValidationError",
    "design_filter",
    "legacy_recursion",
    "monte_carlo",
    "propagate",
    "solve",
    "validate",
]


def validate(result, n_trials=10000, seed=0, threads=0, sampling=None):
    """Runs Monte Carlo on a converged result and stores the report on it."""
    if not result.converged:
        raise PreconditionError(f"result status is {result.status}, no policy to validate")
    report = monte_carlo(
        result.problem,
        result.schedule,
        result.policy,
        n_trials=n_trials,
        seed=seed,
        threads=threads,
        sampling=sampling,
    )
    result.monte_carlo = report
    return report
