from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from isap.anchors import AnchorSet, label_many
from isap.models.blocks import PAST_SCALE, normalize_state
from isap.scenegen import Scene, rasterize_many, speed_heuristic
from isap.scenegen.raster import MAP_CHANNEL, SOCIAL_CHANNEL
from isap.schemas.experiment import RasterSection


@dataclass
class Batch:
    raster: np.ndarray          # N x 3 x H x W
    state: np.ndarray           # N x 3, normalized
    labels: np.ndarray          # N nearest-anchor classes
    future: np.ndarray          # N x T x 2 metres
    agent_target: np.ndarray    # N x (2P + 3)
    speed: np.ndarray           # N speed heuristic values
    seeds: np.ndarray           # N scene seeds

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def map_target(self) -> np.ndarray:
        return self.raster[:, MAP_CHANNEL]

    @property
    def social_target(self) -> np.ndarray:
        return self.raster[:, SOCIAL_CHANNEL]

    def take(self, index: np.ndarray) -> "Batch":
        return Batch(**{name: value[index] for name, value in vars(self).items()})


def build_batch(scenes: list[Scene], anchors: AnchorSet, raster: Optional[RasterSection] = None,
                speed_window: int = 3) -> Batch:
    raster_config = raster or RasterSection()
    if scenes:
        future = np.stack([s.future for s in scenes])
        past = np.stack([s.past for s in scenes]).reshape(len(scenes), -1)
        state = np.stack([normalize_state(s.state) for s in scenes])
    else:
        future = np.zeros((0, anchors.horizon, 2))
        past, state = np.zeros((0, 0)), np.zeros((0, 3))
    return Batch(
        raster=rasterize_many(scenes, raster_config),
        state=state,
        labels=label_many(future, anchors),
        future=future,
        agent_target=np.concatenate([past / PAST_SCALE, state], axis=1),
        speed=np.array([speed_heuristic(s, speed_window) for s in scenes]),
        seeds=np.array([s.seed for s in scenes], dtype=np.uint64),
    )


def iterate_minibatches(batch: Batch, size: int, rng: Optional[np.random.Generator] = None) -> Iterator[Batch]:
    """Shuffled (when rng is given) minibatches; a trailing single sample is dropped for batch-norm."""
    order = rng.permutation(len(batch)) if rng is not None else np.arange(len(batch))
    for start in range(0, len(order), size):
        index = order[start:start + size]
        if rng is not None and len(index) < 2:
            continue
        yield batch.take(index)
