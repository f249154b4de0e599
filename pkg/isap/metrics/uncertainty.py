"""Ranking, calibration and confidence metrics."""
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from sklearn.metrics import average_precision_score, roc_auc_score

from isap.core.errors import DomainError


@dataclass(frozen=True)
class ScoredSample:
    score: float
    label: int

    def __post_init__(self):
        if not np.isfinite(self.score):
            raise DomainError(detail=f"score must be finite, got {self.score}")
        if self.label not in (0, 1):
            raise DomainError(detail=f"label must be 0 or 1, got {self.label}")


def scored(scores, labels) -> list[ScoredSample]:
    return [ScoredSample(score=float(s), label=int(l)) for s, l in zip(scores, labels)]


def _arrays(samples: Sequence[ScoredSample]) -> tuple[np.ndarray, np.ndarray]:
    scores = np.array([s.score for s in samples], dtype=np.float64)
    labels = np.array([s.label for s in samples], dtype=np.int64)
    if len(np.unique(labels)) != 2:
        raise DomainError(detail="ranking metrics need both labels present")
    return scores, labels


def auroc(samples: Sequence[ScoredSample]) -> float:
    """Area under the ROC curve; tied scores count half."""
    scores, labels = _arrays(samples)
    return float(roc_auc_score(labels, scores))


def apr(samples: Sequence[ScoredSample]) -> float:
    """Average precision: precision at each positive, step interpolation."""
    scores, labels = _arrays(samples)
    return float(average_precision_score(labels, scores))


def ece(confidences, correct, bins: int = 10) -> float:
    """Expected calibration error over equal-width, right-inclusive bins on [0, 1]."""
    conf = np.asarray(confidences, dtype=np.float64)
    hits = np.asarray(correct, dtype=np.float64)
    if conf.size == 0:
        raise DomainError(detail="ECE needs at least one prediction")
    if bins < 1:
        raise DomainError(detail=f"bins must be positive, got {bins}")
    index = np.clip(np.ceil(conf * bins).astype(np.int64) - 1, 0, bins - 1)
    total = 0.0
    for b in range(bins):
        members = index == b
        n = int(members.sum())
        if n:
            total += n / conf.size * abs(hits[members].mean() - conf[members].mean())
    return float(total)


def brier(xi_bar, label) -> np.ndarray:
    """Squared distance between the categorical mean and the one-hot label (per sample)."""
    xi_bar = np.asarray(xi_bar, dtype=np.float64)
    label = np.asarray(label, dtype=np.int64)
    classes = xi_bar.shape[-1]
    if np.any(label < 0) or np.any(label >= classes):
        raise DomainError(detail=f"label out of range for {classes} classes")
    onehot = np.zeros_like(xi_bar)
    np.put_along_axis(onehot, label[..., None], 1.0, axis=-1)
    return ((xi_bar - onehot) ** 2).sum(axis=-1)


@dataclass
class ConfidenceScores:
    aleatoric: list[ScoredSample]
    epistemic: Optional[list[ScoredSample]]


def epistemic_confidence(alpha: Optional[np.ndarray], ensemble_score: Optional[np.ndarray]) -> Optional[np.ndarray]:
    """max alpha for posterior networks, 1/Var for ensembles, absent for plain classifiers."""
    if alpha is not None:
        return alpha.max(axis=-1)
    return ensemble_score


def evidence(alpha: Optional[np.ndarray], ensemble_score: Optional[np.ndarray]) -> Optional[np.ndarray]:
    """alpha_0 for posterior networks, 1/Var for ensembles."""
    if alpha is not None:
        return alpha.sum(axis=-1)
    return ensemble_score


def confidence_scores(probs, labels, alpha=None, ensemble_score=None) -> ConfidenceScores:
    """Scores for correct-vs-wrong ranking; label 1 marks a correct anchor prediction."""
    probs = np.asarray(probs, dtype=np.float64)
    correct = (np.argmax(probs, axis=-1) == np.asarray(labels)).astype(int)
    epistemic = epistemic_confidence(alpha, ensemble_score)
    return ConfidenceScores(
        aleatoric=scored(probs.max(axis=-1), correct),
        epistemic=None if epistemic is None else scored(epistemic, correct),
    )


def ood_scores(id_probs, ood_probs, id_alpha=None, ood_alpha=None, id_ensemble=None, ood_ensemble=None) -> ConfidenceScores:
    """Scores for ID-vs-OOD ranking; label 1 marks in-distribution samples."""
    id_probs, ood_probs = np.asarray(id_probs, float), np.asarray(ood_probs, float)
    labels = np.concatenate([np.ones(len(id_probs), int), np.zeros(len(ood_probs), int)])
    aleatoric = np.concatenate([id_probs.max(axis=-1), ood_probs.max(axis=-1)])
    id_ev, ood_ev = evidence(id_alpha, id_ensemble), evidence(ood_alpha, ood_ensemble)
    epistemic = None if id_ev is None or ood_ev is None else scored(np.concatenate([id_ev, ood_ev]), labels)
    return ConfidenceScores(aleatoric=scored(aleatoric, labels), epistemic=epistemic)


def alpha0_ratio(id_alpha0, ood_alpha0) -> float:
    return float(np.mean(ood_alpha0) / np.mean(id_alpha0))
