"""Chimera states in coupled star networks of phase oscillators.

Submodules: ``core`` (models and vector fields), ``integrate`` (adaptive
integration with events), ``ws`` (Möbius reduction), ``averaging``
(large-β averaged dynamics) and ``experiments`` (numerical studies).
"""

from .core import (
    ContractError,
    CouplingSpec,
    OrderParameter,
    PhaseState,
    StarParams,
    order_parameter,
)
from .integrate import EventSpec, IntegrationError, IntegratorConfig, RunRecord, integrate

__all__ = [
    "ContractError", "CouplingSpec", "EventSpec", "IntegrationError", "IntegratorConfig", "OrderParameter",
    "PhaseState", "RunRecord", "StarParams", "integrate", "order_parameter",
]
