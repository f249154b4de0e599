import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from sklearn.cluster import KMeans

from isap.core.errors import DomainError, ShapeMismatchError
from isap.core.rng import derive_seed
from isap.scenegen.scene import f32

logger = logging.getLogger(__name__)

LABEL_CHUNK = 1024


@dataclass
class AnchorSet:
    anchors: np.ndarray
    seed: int
    provenance: dict = field(default_factory=dict)

    @property
    def count(self) -> int:
        return self.anchors.shape[0]

    @property
    def horizon(self) -> int:
        return self.anchors.shape[1]


def _as_trajectories(futures) -> np.ndarray:
    futures = np.asarray(futures, dtype=np.float64)
    if futures.ndim != 3 or futures.shape[-1] != 2:
        raise ShapeMismatchError(detail=f"expected N x T x 2 trajectories, got {futures.shape}")
    return futures


def fit_anchors(futures, count: int, seed: int, max_iter: int = 200, tol: float = 1e-6) -> AnchorSet:
    """k-means (k-means++ init) over flattened 2T-dim trajectories.

    `tol` bounds the total centroid shift in metres between two iterations.
    Clusters that empty out are re-seeded from the farthest points by the solver.
    """
    futures = _as_trajectories(futures)
    flat = futures.reshape(len(futures), -1)
    distinct = len(np.unique(flat, axis=0)) if len(flat) else 0
    if count < 1 or distinct < count:
        raise DomainError(detail=f"need at least {count} distinct trajectories, got {distinct}")

    spread = float(np.mean(np.var(flat, axis=0)))
    relative_tol = tol * tol / spread if spread > 0 else 0.0
    km = KMeans(
        n_clusters=count,
        init="k-means++",
        n_init=1,
        max_iter=max_iter,
        tol=relative_tol,
        random_state=np.random.RandomState(seed % (2**32)),
        algorithm="lloyd",
    ).fit(flat)
    anchors = f32(km.cluster_centers_.reshape(count, futures.shape[1], 2))
    logger.info(f"Fitted {count} anchors in {km.n_iter_} iterations (inertia {km.inertia_:.3f})")
    return AnchorSet(anchors=anchors, seed=seed, provenance={"iterations": int(km.n_iter_), "inertia": float(km.inertia_)})


def _distances(futures: np.ndarray, anchors: AnchorSet) -> np.ndarray:
    if futures.shape[1:] != anchors.anchors.shape[1:]:
        raise ShapeMismatchError(
            detail=f"trajectory shape {futures.shape[1:]} does not match anchors {anchors.anchors.shape[1:]}"
        )
    diff = futures[:, None, :, :] - anchors.anchors[None, :, :, :]
    return np.linalg.norm(diff, axis=-1).mean(axis=-1)


def mean_distances(futures, anchors: AnchorSet) -> np.ndarray:
    """N x C mean point-wise Euclidean distance to every anchor."""
    futures = _as_trajectories(futures)
    if len(futures) == 0:
        return np.zeros((0, anchors.count))
    return np.concatenate([_distances(futures[i:i + LABEL_CHUNK], anchors) for i in range(0, len(futures), LABEL_CHUNK)])


def label(future, anchors: AnchorSet) -> int:
    """Nearest anchor by mean point-wise distance; the lowest index wins ties."""
    future = np.asarray(future, dtype=np.float64)
    if future.ndim != 2:
        raise ShapeMismatchError(detail=f"expected a T x 2 trajectory, got {future.shape}")
    return int(np.argmin(mean_distances(future[None], anchors)[0]))


def label_many(futures, anchors: AnchorSet) -> np.ndarray:
    return np.argmin(mean_distances(futures, anchors), axis=1).astype(np.int64)


def class_counts(labels: np.ndarray, count: int) -> np.ndarray:
    return np.bincount(np.asarray(labels, dtype=np.int64), minlength=count)


def fit_anchor_set(futures, count: int, seed: int, max_iter: int = 200, tol: float = 1e-6,
                   max_refits: int = 5) -> tuple[AnchorSet, np.ndarray]:
    """Fit, then refit with a derived seed while some class receives no training label."""
    futures = _as_trajectories(futures)
    anchors: Optional[AnchorSet] = None
    counts = np.zeros(count, dtype=np.int64)
    for attempt in range(max_refits + 1):
        attempt_seed = seed if attempt == 0 else derive_seed(seed, attempt)
        anchors = fit_anchors(futures, count, attempt_seed, max_iter=max_iter, tol=tol)
        counts = class_counts(label_many(futures, anchors), count)
        empty = int(np.count_nonzero(counts == 0))
        if empty == 0:
            break
        logger.warning(f"Anchor fit (seed {attempt_seed}) left {empty} empty classes; refitting")
    else:
        logger.warning(f"Keeping anchor set with {int(np.count_nonzero(counts == 0))} empty classes after {max_refits} refits")
    anchors.provenance["refits"] = attempt
    return anchors, counts
