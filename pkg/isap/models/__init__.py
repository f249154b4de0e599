from isap.models.batching import Batch, build_batch, iterate_minibatches
from isap.models.ensemble import EnsembleModel, ensemble_scores
from isap.models.inference import Predictions, predict_all
from isap.models.networks import (
    CoverNet,
    IsapNet,
    IsapOutput,
    PostCoverNet,
    baseline_forward,
    build_model,
    isap_forward,
    postcovernet_forward,
    reconstruction_losses,
)
from isap.models.training import TrainResult, train, train_ensemble, training_splits

__all__ = [
    "Batch",
    "CoverNet",
    "EnsembleModel",
    "IsapNet",
    "IsapOutput",
    "PostCoverNet",
    "Predictions",
    "TrainResult",
    "baseline_forward",
    "build_batch",
    "build_model",
    "ensemble_scores",
    "isap_forward",
    "iterate_minibatches",
    "postcovernet_forward",
    "predict_all",
    "reconstruction_losses",
    "train",
    "train_ensemble",
    "training_splits",
]
