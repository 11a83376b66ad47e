"""Finite-key secure key lengths for SPS and decoy-state WCP protocols."""

from .core import (
    DomainError,
    InsufficientBlock,
    KeyReport,
    ProtocolConfig,
    SecurityParams,
    TallySet,
    binary_entropy,
    chernoff_bound,
    expected_tallies,
    sps_expected_rate,
    sps_key_length,
)
from .wcp import (
    DecoyInfeasible,
    WcpIntensities,
    wcp_asymptotic_practical_rate,
    wcp_finite_key_rate,
)
from .comparison import (
    CompareReport,
    NoCrossover,
    compare,
    finite_boundary,
    optimized_sps_rate,
    optimized_wcp_rate,
    sweep_rates,
)

__all__ = [
    "DomainError",
    "InsufficientBlock",
    "KeyReport",
    "ProtocolConfig",
    "SecurityParams",
    "TallySet",
    "binary_entropy",
    "chernoff_bound",
    "expected_tallies",
    "sps_expected_rate",
    "sps_key_length",
    "DecoyInfeasible",
    "WcpIntensities",
    "wcp_asymptotic_practical_rate",
    "wcp_finite_key_rate",
    "CompareReport",
    "NoCrossover",
    "compare",
    "finite_boundary",
    "optimized_sps_rate",
    "optimized_wcp_rate",
    "sweep_rates",
]
