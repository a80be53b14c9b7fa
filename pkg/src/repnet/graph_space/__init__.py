"""Colored graphs, pointed balls and the pattern space of pointed colored graphs."""
from .balls import PointedBall, hop_ball
from .graph import ColoredGraph, GraphError, HopMetricSpace, cycle_graph, path_graph
from .isomorphism import BallIsomorphism, ball_isomorphism, check_ball_isomorphism
from .patterns import (NotRepetitive, OmegaOracle, PersistenceTable, PPQIResult, agreement_radius,
                       gstar_distance, omega_set, persistence_depth, ppqi_check, repetitivity_radius)

__all__ = [
    "BallIsomorphism", "ColoredGraph", "GraphError", "HopMetricSpace", "NotRepetitive", "OmegaOracle",
    "PPQIResult", "PersistenceTable", "PointedBall", "agreement_radius", "ball_isomorphism",
    "check_ball_isomorphism", "cycle_graph", "gstar_distance", "hop_ball", "omega_set", "path_graph",
    "persistence_depth", "ppqi_check", "repetitivity_radius",
]
