from .ops import (
    aniso_resample_aug,
    clamp_aug,
    dropout_box_aug,
    elastic_aug,
    noise_aug,
    sample_box,
    translate_aug,
    warp,
    zero_box,
)
from .policy import OPS, AugPolicy, AugPolicyError, apply_op, apply_policy
from .rng import AugRng

__all__ = [
    "OPS",
    "AugPolicy",
    "AugPolicyError",
    "AugRng",
    "aniso_resample_aug",
    "apply_op",
    "apply_policy",
    "clamp_aug",
    "dropout_box_aug",
    "elastic_aug",
    "noise_aug",
    "sample_box",
    "translate_aug",
    "warp",
    "zero_box",
]
