from .checkpoint import CheckpointFormatError, checkpoint_domain, load_checkpoint, read_metadata, save_checkpoint
from .data import EpochKeyedSampler, SdfDataset, TrainingSample, load_training_samples, stratified_split
from .model import (
    DEFAULT_BLOCKS,
    ENCODER_BLOCKS,
    DimensionMismatchError,
    ModelConfig,
    SurrogateModel,
    SurrogateNet,
    build_model,
    count_parameters,
    grid_tensor,
    init_weights,
    predict,
)
from .scaler import Scaler, ScalerError, fit_scalers
from .train import SurrogateModule, TrainConfig, TrainingDivergedError, TrainResult, fit_model, train

__all__ = [
    "CheckpointFormatError",
    "DEFAULT_BLOCKS",
    "DimensionMismatchError",
    "ENCODER_BLOCKS",
    "EpochKeyedSampler",
    "ModelConfig",
    "Scaler",
    "ScalerError",
    "SdfDataset",
    "SurrogateModel",
    "SurrogateModule",
    "SurrogateNet",
    "TrainConfig",
    "TrainResult",
    "TrainingDivergedError",
    "TrainingSample",
    "build_model",
    "checkpoint_domain",
    "count_parameters",
    "fit_model",
    "fit_scalers",
    "grid_tensor",
    "init_weights",
    "load_checkpoint",
    "load_training_samples",
    "predict",
    "read_metadata",
    "save_checkpoint",
    "stratified_split",
    "train",
]
