import numpy as np

from isap.core.errors import DomainError
from isap.diffcore import Module, no_grad, ops
from isap.models.networks import CoverNet
from isap.schemas.experiment import ModelKind

VARIANCE_FLOOR = 1e-12


class EnsembleModel(Module):
    """Independently trained anchor classifiers evaluated together."""

    kind = ModelKind.ENSEMBLE

    def __init__(self, members: list[CoverNet]):
        super().__init__()
        self.members = list(members)

    def subset(self, size: int) -> "EnsembleModel":
        return EnsembleModel(self.members[:size])


def member_probabilities(members: list[CoverNet], raster, state) -> np.ndarray:
    """M x N x C softmax outputs, evaluated without building a graph."""
    with no_grad():
        return np.stack([ops.softmax(member(raster, state), axis=-1).data for member in members])


def scores_from_probabilities(probs: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(mean probs N x C, epistemic score N, variance N) from M x N x C member outputs.

    The variance is the population variance across members of the probability
    assigned to the ensemble's predicted class.
    """
    if probs.shape[0] < 2:
        raise DomainError(detail=f"an ensemble needs at least 2 members, got {probs.shape[0]}")
    mean = probs.mean(axis=0)
    predicted = np.argmax(mean, axis=-1)
    picked = np.take_along_axis(probs, np.broadcast_to(predicted[None, :, None], probs.shape[:2] + (1,)), axis=-1)[..., 0]
    variance = picked.var(axis=0)
    return mean, 1.0 / (variance + VARIANCE_FLOOR), variance


def ensemble_scores(members: list[CoverNet], raster, state) -> tuple[np.ndarray, np.ndarray]:
    if len(members) < 2:
        raise DomainError(detail=f"an ensemble needs at least 2 members, got {len(members)}")
    mean, score, _ = scores_from_probabilities(member_probabilities(members, raster, state))
    return mean, score
