"""Dynamical activity, counting statistics and uncertainty relations for Lindblad models."""

from ._qdyn import (
    Model,
    ModelError,
    SchemaError,
    activity,
    bounds,
    counting,
    evolve,
    load_model,
    model_from_json,
    qfi,
    relations,
    trajectories,
    validate,
)

__all__ = [
    "Model",
    "ModelError",
    "SchemaError",
    "activity",
    "bounds",
    "counting",
    "evolve",
    "load_model",
    "model_from_json",
    "qfi",
    "relations",
    "trajectories",
    "validate",
]
