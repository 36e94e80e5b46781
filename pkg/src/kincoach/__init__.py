"""Streaming biomechanical analysis of exercise joint-angle trajectories."""
from .errors import InputError, InvariantError, KincoachError
from .skeleton import SKELETON, ExerciseConfig, ReferenceTrajectory, load_exercise_config, resolve_config

__version__ = "0.1.0"

__all__ = ["SKELETON", "ExerciseConfig", "ReferenceTrajectory", "load_exercise_config", "resolve_config",
           "KincoachError", "InputError", "InvariantError"]
