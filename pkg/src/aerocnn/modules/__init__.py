from .gradcheck import GradCheckReport, grad_check
from .nn import (
    SCSE,
    BatchStandardize,
    DivisibilityError,
    ShapeMismatchError,
    StochasticDepth,
    TokenAttention,
    activation,
    conv3d,
    conv3x3,
    group_norm,
    normalization,
    spatial_tokens,
)
from .optim import (
    LrSchedule,
    NonFiniteGradientError,
    RAdam,
    assign_learning_rate,
    cyclic_lr,
    cyclic_lr_adjuster,
    radam_step,
    rectification_rho,
)

__all__ = [
    "SCSE",
    "BatchStandardize",
    "DivisibilityError",
    "GradCheckReport",
    "LrSchedule",
    "NonFiniteGradientError",
    "RAdam",
    "ShapeMismatchError",
    "StochasticDepth",
    "TokenAttention",
    "activation",
    "assign_learning_rate",
    "conv3d",
    "conv3x3",
    "cyclic_lr",
    "cyclic_lr_adjuster",
    "grad_check",
    "group_norm",
    "normalization",
    "radam_step",
    "rectification_rho",
    "spatial_tokens",
]
