# src/transport/__init__.py
from src.transport.curvature import (
    Holonomy,
    ParallelTransport,
    curvature_table,
    holonomy,
    hyperedge_curvature_table,
    ollivier_ricci_hyperedge,
    ollivier_ricci_pair,
    parallel_transport,
    ricci_direction,
    scalar_curvature,
    sectional_curvature,
)
from src.transport.measures import DiscreteMeasure, hyperedge_measures, sphere_measure, uniform_ball_measure
from src.transport.wasserstein import Coupling, TransportPlan, coupling_marginals, wasserstein1

__all__ = [
    "DiscreteMeasure",
    "Coupling",
    "TransportPlan",
    "ParallelTransport",
    "Holonomy",
    "uniform_ball_measure",
    "sphere_measure",
    "hyperedge_measures",
    "wasserstein1",
    "coupling_marginals",
    "ollivier_ricci_pair",
    "ollivier_ricci_hyperedge",
    "parallel_transport",
    "holonomy",
    "sectional_curvature",
    "ricci_direction",
    "scalar_curvature",
    "curvature_table",
    "hyperedge_curvature_table",
]
