"""Numerical studies: synchronization diagrams, chimera lifetimes, z ≈ α checks and BA networks."""

from .chimera import (
    ChimeraCriterion,
    ConfigurationError,
    LifetimeResult,
    SweepResult,
    check_bistable,
    cycles,
    fit_loglog,
    general_h,
    lifetime_sweep,
    measure_lifetime,
    prepare_chimera_initial,
    sparse_coupling_run,
)
from .diagram import DiagramPoint, hysteresis_area, sync_diagram, transition_sigma
from .networks import BaGraph, ba_chimera_run, ba_initial, degree_exponent, generate_ba
from .rng import stream
from .zalpha import ZAlphaTable, verify_z_alpha

__all__ = [
    "BaGraph", "ChimeraCriterion", "ConfigurationError", "DiagramPoint", "LifetimeResult", "SweepResult",
    "ZAlphaTable", "ba_chimera_run", "ba_initial", "check_bistable", "cycles", "degree_exponent",
    "fit_loglog", "general_h", "generate_ba", "hysteresis_area", "lifetime_sweep", "measure_lifetime",
    "prepare_chimera_initial", "sparse_coupling_run", "stream", "sync_diagram", "transition_sigma",
    "verify_z_alpha",
]
