from isap.metrics.trajectory import fde, min_ade_k
from isap.metrics.uncertainty import (
    ScoredSample,
    alpha0_ratio,
    apr,
    auroc,
    brier,
    confidence_scores,
    ece,
    ood_scores,
    scored,
)

__all__ = [
    "ScoredSample",
    "alpha0_ratio",
    "apr",
    "auroc",
    "brier",
    "confidence_scores",
    "ece",
    "fde",
    "min_ade_k",
    "ood_scores",
    "scored",
]
