"""Local-control pulse design for tunable-coupler devices."""

from ._core import (
    ConfigError,
    DomainError,
    NumericalError,
    SystemParams,
    analytic_pulse,
    avoided_crossings,
    eigenvalues,
    lowpass_filter,
    power_spectrum,
    reference_device,
    run_lct,
    transfer_error,
    truncate,
)

__all__ = [
    "ConfigError",
    "DomainError",
    "NumericalError",
    "SystemParams",
    "analytic_pulse",
    "avoided_crossings",
    "eigenvalues",
    "lowpass_filter",
    "power_spectrum",
    "reference_device",
    "run_lct",
    "transfer_error",
    "truncate",
]
