"""
Bridge Lab Logic Module

Provides the oracle, simulation and verification layers.
"""

from .constants import BridgeKind, ProcessFamily, Suite, Verdict
from .contracts import (
    BridgeSpec,
    EstimateReport,
    GaussianMoment,
    PathBundle,
    ProcessParams,
    RegionLabel,
    RegionPoint,
    SeedSpec,
    SimulationOptions,
    SuiteReport,
    TimeChange,
    TimeGrid,
    VerificationReport,
)
from .errors import BridgeLabError, DomainError, NumericalError, RegistryError, UnsupportedOperationError
from .runner import run_suite, run_verification

__all__ = [
    # Entry points
    "run_suite",
    "run_verification",

    # Contracts
    "BridgeSpec",
    "EstimateReport",
    "GaussianMoment",
    "PathBundle",
    "ProcessParams",
    "RegionLabel",
    "RegionPoint",
    "SeedSpec",
    "SimulationOptions",
    "SuiteReport",
    "TimeChange",
    "TimeGrid",
    "VerificationReport",

    # Errors
    "BridgeLabError",
    "DomainError",
    "NumericalError",
    "RegistryError",
    "UnsupportedOperationError",

    # Enums
    "BridgeKind",
    "ProcessFamily",
    "Suite",
    "Verdict",
]
