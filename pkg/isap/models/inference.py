from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from isap.core.errors import DomainError
from isap.diffcore import Module, as_tensor, no_grad, ops
from isap.evidential import categorical_entropy, dirichlet_entropy
from isap.evidential.dirichlet import DirichletParams
from isap.models.batching import Batch, iterate_minibatches
from isap.models.ensemble import EnsembleModel, member_probabilities, scores_from_probabilities
from isap.models.networks import CoverNet, IsapNet, PostCoverNet


@dataclass
class Predictions:
    """Per-sample model outputs over an evaluation set (eval mode, batch-norm frozen)."""

    probs: np.ndarray
    alpha: Optional[np.ndarray] = None
    concept_alpha: dict[str, np.ndarray] = field(default_factory=dict)
    ensemble_score: Optional[np.ndarray] = None

    @property
    def predicted(self) -> np.ndarray:
        return np.argmax(self.probs, axis=-1)

    @property
    def alpha0(self) -> Optional[np.ndarray]:
        return None if self.alpha is None else self.alpha.sum(axis=-1)

    @property
    def evidential(self) -> bool:
        return self.alpha is not None

    def categorical_entropy(self) -> np.ndarray:
        return categorical_entropy(self.probs)

    def dirichlet_entropy(self) -> Optional[np.ndarray]:
        if self.alpha is None:
            return None
        return dirichlet_entropy(DirichletParams(alpha=as_tensor(self.alpha)))


def _predict_batch(model: Module, part: Batch) -> Predictions:
    if isinstance(model, EnsembleModel):
        mean, score, _ = scores_from_probabilities(member_probabilities(model.members, part.raster, part.state))
        return Predictions(probs=mean, ensemble_score=score)
    with no_grad():
        if isinstance(model, IsapNet):
            out = model(part.raster, part.state, decode=False)
            alpha = out.alpha.alpha.data
            concepts = {name: d.alpha.data for name, d in out.concept_alphas().items()}
            return Predictions(probs=alpha / alpha.sum(axis=-1, keepdims=True), alpha=alpha, concept_alpha=concepts)
        if isinstance(model, PostCoverNet):
            alpha = model(part.raster, part.state).alpha.alpha.data
            return Predictions(probs=alpha / alpha.sum(axis=-1, keepdims=True), alpha=alpha)
        if isinstance(model, CoverNet):
            return Predictions(probs=ops.softmax(model(part.raster, part.state), axis=-1).data)
    raise DomainError(detail=f"cannot evaluate {type(model).__name__}")


def predict_all(model: Module, batch: Batch, batch_size: int = 128) -> Predictions:
    model.eval()
    parts = [_predict_batch(model, part) for part in iterate_minibatches(batch, batch_size)]
    if not parts:
        raise DomainError(detail="cannot evaluate an empty set")

    def join(name: str):
        values = [getattr(p, name) for p in parts]
        return None if values[0] is None else np.concatenate(values)

    concepts = {name: np.concatenate([p.concept_alpha[name] for p in parts]) for name in parts[0].concept_alpha}
    return Predictions(
        probs=join("probs"),
        alpha=join("alpha"),
        concept_alpha=concepts,
        ensemble_score=join("ensemble_score"),
    )
