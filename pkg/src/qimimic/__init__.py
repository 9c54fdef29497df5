"""Object detection with thermal-mimicking coherent pulses versus quantum illumination.

Submodules: ``model`` (parameters, protocols, scenarios), ``photonstats``,
``detection``, ``bayes``, ``mc``, ``analytic``, ``figures`` and ``cli``.
"""
from __future__ import annotations

__version__ = "0.1.0"

from .model import (
    FixedCoherent,
    ParameterError,
    RandomCoherent,
    Scenario,
    SystemParams,
    TmsvDirect,
    parse_protocol,
    validate_params,
)

__all__ = [
    "__version__",
    "FixedCoherent",
    "ParameterError",
    "RandomCoherent",
    "Scenario",
    "SystemParams",
    "TmsvDirect",
    "parse_protocol",
    "validate_params",
]
