"""Response-kernel laboratory for finite fermion systems."""

from lrkernel._core import (
    AssertionFailure,
    System,
    ValidationError,
    chi,
    custom_system,
    ensemble_weights,
    hubbard_chain,
    kernel,
    natural_occupations,
    propagate,
    run_experiment,
    static_thermal_response,
    __version__,
)

__all__ = [
    "AssertionFailure",
    "System",
    "ValidationError",
    "chi",
    "custom_system",
    "ensemble_weights",
    "hubbard_chain",
    "kernel",
    "natural_occupations",
    "propagate",
    "run_experiment",
    "static_thermal_response",
    "__version__",
]
