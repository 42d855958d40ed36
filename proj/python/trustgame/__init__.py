"""Trust game on an adaptive donator/rewarder network."""

from ._trustgame import (
    RuntimeFailure,
    ValidationError,
    cli,
    find_critical_a,
    loglog_slope,
    master_eq,
    psd,
    simulate,
    stability_indicator,
    tail_exponent,
)

__all__ = [
    "RuntimeFailure",
    "ValidationError",
    "cli",
    "find_critical_a",
    "loglog_slope",
    "master_eq",
    "psd",
    "simulate",
    "stability_indicator",
    "tail_exponent",
]
