from .kan import KanLayer, kan_layer_backward, kan_layer_forward
from .networks import (
    DEFAULT_HIDDEN,
    MODEL_KINDS,
    Architecture,
    KanModel,
    MlpModel,
    assign_params,
    build_model,
    encode_targets,
    extract_params,
    init_model,
    make_architecture,
    model_backward,
    model_forward,
)
from .splines import SplineGrid, basis_matrix, bspline_basis

__all__ = [
    "Architecture",
    "DEFAULT_HIDDEN",
    "KanLayer",
    "KanModel",
    "MODEL_KINDS",
    "MlpModel",
    "SplineGrid",
    "assign_params",
    "basis_matrix",
    "bspline_basis",
    "build_model",
    "encode_targets",
    "extract_params",
    "init_model",
    "kan_layer_backward",
    "kan_layer_forward",
    "make_architecture",
    "model_backward",
    "model_forward",
]
