"""Numeric core: autodiff tensors, CSR adjacency, graph layers, models."""

from .model import (
    ARCHITECTURES,
    GnnModel,
    ModelConfig,
    init_parameters,
    load_checkpoint,
    model_backward,
    model_forward,
    parameter_shapes,
    predict,
    save_checkpoint,
)
from .sparse import CsrAdjacency, CsrMatrix, adjacency_from_kb, from_coo

__all__ = [
    "ARCHITECTURES",
    "CsrAdjacency",
    "CsrMatrix",
    "GnnModel",
    "ModelConfig",
    "adjacency_from_kb",
    "from_coo",
    "init_parameters",
    "load_checkpoint",
    "model_backward",
    "model_forward",
    "parameter_shapes",
    "predict",
    "save_checkpoint",
]
