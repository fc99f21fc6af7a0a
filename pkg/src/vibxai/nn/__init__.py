from .layers import BatchNorm1d, Conv1d, Dense, Flatten, MaxPool1d, ReLU, Softmax
from .model import (
    ConvBlockSpec,
    DEFAULT_BLOCKS,
    Model,
    ModelConfig,
    cross_entropy,
    loss_and_grads,
    smoothed_targets,
)
from .optim import AdamState, adam_step
from .training import (
    Checkpoint,
    TrainConfig,
    TrainingDiverged,
    fit_standardizer,
    predict,
    restore_model,
    train,
)
from .checkpoint import CheckpointError, load_weights, save_weights

__all__ = [
    "AdamState",
    "BatchNorm1d",
    "Checkpoint",
    "CheckpointError",
    "Conv1d",
    "ConvBlockSpec",
    "DEFAULT_BLOCKS",
    "Dense",
    "Flatten",
    "MaxPool1d",
    "Model",
    "ModelConfig",
    "ReLU",
    "Softmax",
    "TrainConfig",
    "TrainingDiverged",
    "adam_step",
    "cross_entropy",
    "fit_standardizer",
    "load_weights",
    "loss_and_grads",
    "predict",
    "restore_model",
    "save_weights",
    "smoothed_targets",
    "train",
]
