"""Autoregressive mixture-of-experts VAE for motion frames."""
from .augment import AugmentConfig, UntrainedModelError, augment_many, augment_sequence, refine_frame, sample_seeds
from .model import (
    ModelFormatError, VaeConfig, VaeModel, decode, elbo_loss, encode, kl_divergence, load_model, model_to_dict,
    reparameterize, save_model,
)
from .train import (
    DatasetError, TrainConfig, TrainHistory, TrainingDivergedError, learning_rate, make_windows,
    sampling_probability, stage_of, train, window_loss,
)

__all__ = [
    "AugmentConfig", "UntrainedModelError", "augment_many", "augment_sequence", "refine_frame", "sample_seeds",
    "ModelFormatError", "VaeConfig", "VaeModel", "decode", "elbo_loss", "encode", "kl_divergence", "load_model",
    "model_to_dict", "reparameterize", "save_model",
    "DatasetError", "TrainConfig", "TrainHistory", "TrainingDivergedError", "learning_rate", "make_windows",
    "sampling_probability", "stage_of", "train", "window_loss",
]
