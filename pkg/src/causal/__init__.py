# src/causal/__init__.py
from src.causal.foliation import (
    EventCoordinates,
    Foliation,
    Interval,
    Rapidity,
    Refoliation,
    boost,
    check_foliation,
    classify_interval,
    foliate_standard,
    minkowski_norm,
    refoliate,
)
from src.causal.graph import (
    CauchyDevelopment,
    CausalGraph,
    LightCone,
    build_causal_graph,
    cauchy_development,
    causally_precedes,
    chronologically_precedes,
    futures_pasts,
    futures_pasts_of_set,
    is_achronal,
    is_cauchy_surface,
    validate_trace,
)
from src.causal.invariance import InvarianceReport, causal_invariant, history_causal_key, replay_order

__all__ = [
    "CausalGraph",
    "LightCone",
    "CauchyDevelopment",
    "build_causal_graph",
    "validate_trace",
    "futures_pasts",
    "futures_pasts_of_set",
    "chronologically_precedes",
    "causally_precedes",
    "is_achronal",
    "cauchy_development",
    "is_cauchy_surface",
    "Interval",
    "EventCoordinates",
    "Foliation",
    "Rapidity",
    "Refoliation",
    "minkowski_norm",
    "classify_interval",
    "check_foliation",
    "foliate_standard",
    "boost",
    "refoliate",
    "InvarianceReport",
    "causal_invariant",
    "history_causal_key",
    "replay_order",
]
