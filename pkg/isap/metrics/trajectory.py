import numpy as np

from isap.core.errors import DomainError, ShapeMismatchError


def _ranked(probs: np.ndarray) -> np.ndarray:
    """Class indices by descending probability; equal probabilities keep index order."""
    return np.argsort(-probs, axis=-1, kind="stable")


def _check(probs: np.ndarray, anchors: np.ndarray, gt: np.ndarray):
    if probs.shape[-1] != anchors.shape[0]:
        raise ShapeMismatchError(detail=f"{probs.shape[-1]} class probabilities for {anchors.shape[0]} anchors")
    if gt.shape[-2:] != anchors.shape[1:]:
        raise ShapeMismatchError(detail=f"ground truth {gt.shape[-2:]} vs anchors {anchors.shape[1:]}")


def min_ade_k(probs, anchors, gt, k: int):
    """Smallest mean displacement among the k most probable anchors (batched over leading axes)."""
    probs, anchors, gt = np.asarray(probs, float), np.asarray(anchors, float), np.asarray(gt, float)
    _check(probs, anchors, gt)
    if not 1 <= k <= anchors.shape[0]:
        raise DomainError(detail=f"k must lie in [1, {anchors.shape[0]}], got {k}")
    top = _ranked(probs)[..., :k]
    candidates = anchors[top]
    ade = np.linalg.norm(candidates - gt[..., None, :, :], axis=-1).mean(axis=-1)
    return ade.min(axis=-1)


def fde(probs, anchors, gt):
    """Final-waypoint error of the single most probable anchor."""
    probs, anchors, gt = np.asarray(probs, float), np.asarray(anchors, float), np.asarray(gt, float)
    _check(probs, anchors, gt)
    best = _ranked(probs)[..., 0]
    return np.linalg.norm(anchors[best][..., -1, :] - gt[..., -1, :], axis=-1)
