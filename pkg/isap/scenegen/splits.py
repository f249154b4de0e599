import logging
from collections import Counter
from typing import Optional, Union

import numpy as np

from isap.core.errors import DomainError
from isap.core.rng import derive_seed
from isap.scenegen.generator import generate_scene
from isap.scenegen.scene import SPLITS, DriveSide, Regime, Scene, Split
from isap.schemas.experiment import ExperimentConfig, ExperimentKind, MapKind

logger = logging.getLogger(__name__)

# trailing 1 s at 2 Hz
DEFAULT_WINDOW = 3
ID_MAP_KINDS = {MapKind.STRAIGHT, MapKind.INTERSECTION, MapKind.MULTILANE}

# Unscaled split sizes per experiment.
BASE_COUNTS: dict[ExperimentKind, dict[Split, int]] = {
    ExperimentKind.SPEED: {
        Split.TRAIN: 25669,
        Split.VAL_ID: 7344,
        Split.TEST_ID: 7270,
        Split.VAL_OOD: 2521,
        Split.TEST_OOD: 3267,
    },
    ExperimentKind.MAP: {
        Split.TRAIN: 8110,
        Split.VAL_ID: 318,
        Split.TEST_ID: 2186,
        Split.VAL_OOD: 80,
        Split.TEST_OOD: 364,
    },
}


def speed_heuristic(scene_or_past: Union[Scene, np.ndarray], window: Optional[int] = DEFAULT_WINDOW) -> float:
    """Distance between the oldest and newest waypoint of the trailing `window` past points."""
    past = scene_or_past.past if isinstance(scene_or_past, Scene) else np.asarray(scene_or_past, dtype=np.float64)
    if past.ndim != 2 or past.shape[0] < 2:
        raise DomainError(detail="speed heuristic needs at least two past waypoints")
    if window is not None:
        past = past[-window:]
    return float(np.linalg.norm(past[-1] - past[0]))


def split_speed(scene: Scene, threshold: float = 10.0, window: Optional[int] = DEFAULT_WINDOW) -> Regime:
    if threshold <= 0:
        raise DomainError(detail=f"threshold must be positive, got {threshold}")
    return Regime.ID if speed_heuristic(scene, window) < threshold else Regime.OOD


def split_map(scene: Scene) -> Regime:
    if scene.drive_side == DriveSide.LEFT and scene.map_kind in ID_MAP_KINDS:
        return Regime.ID
    if scene.drive_side == DriveSide.RIGHT and scene.roundabout_tagged:
        return Regime.OOD
    return Regime.EXCLUDED


def split_counts(kind: ExperimentKind, scale: float) -> dict[Split, int]:
    return {split: max(1, int(round(count * scale))) for split, count in BASE_COUNTS[kind].items()}


def generate_dataset(config: ExperimentConfig) -> list[Scene]:
    """All splits for the configured experiment, tagged and checked against the split rule."""
    kind = config.experiment.kind
    gen = config.generator
    counts = split_counts(kind, config.experiment.scale)
    scenes: list[Scene] = []
    for split_index, split in enumerate(SPLITS):
        regime = Regime.OOD if split.is_ood else Regime.ID
        for i in range(counts[split]):
            seed = derive_seed(config.experiment.seed, split_index, i)
            scene = generate_scene(seed, gen, regime=regime, experiment=kind)
            if kind == ExperimentKind.SPEED:
                verdict = split_speed(scene, gen.speed_threshold(), gen.speed_window)
            else:
                verdict = split_map(scene)
            if verdict != regime:
                raise DomainError(detail=f"scene {seed} generated for {regime.value} classifies as {verdict.value}")
            scene.split = split
            scenes.append(scene)
    tally = Counter(s.split.value for s in scenes)
    logger.info(f"Generated {len(scenes)} {kind.value}-split scenes: {dict(tally)}")
    return scenes
