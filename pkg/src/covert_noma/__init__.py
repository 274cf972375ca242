"""Covertness and physical-layer-security analysis for a two-phase CDRT-NOMA
network: closed-form detection-error and secrecy-outage expressions, the
covert-rate and secrecy-rate power-allocation optimizers, and a seeded Monte
Carlo oracle validating every analytic quantity.
"""

from .model import (
    ADAPTIVE,
    AnalysisConstants,
    ChannelRealization,
    PowerAllocation,
    RateSet,
    SinrSet,
    SystemParams,
    achievable_rates,
    compute_sinrs,
    derive_constants,
    eve_combined,
    sample_channels,
)

__version__ = "0.1.0"

__all__ = [
    "ADAPTIVE",
    "AnalysisConstants",
    "ChannelRealization",
    "PowerAllocation",
    "RateSet",
    "SinrSet",
    "SystemParams",
    "achievable_rates",
    "compute_sinrs",
    "derive_constants",
    "eve_combined",
    "sample_channels",
    "__version__",
]
