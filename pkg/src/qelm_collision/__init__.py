"""Collision-model open-system simulator with a QELM parameter-estimation pipeline."""

from .collision import CollisionConfig, Trajectory, generate_trajectory
from .qelm import QELMFeatureMap, ReservoirConfig
from .readout import LinearReadout, nmse

__all__ = [
    "CollisionConfig",
    "Trajectory",
    "generate_trajectory",
    "QELMFeatureMap",
    "ReservoirConfig",
    "LinearReadout",
    "nmse",
]
