"""Synthetic scene generator.

A scene is a pure function of (seed, generator config, regime). The agent follows
its map's reference path with a noisy speed profile; waypoints are emitted at the
configured step (2 Hz by default) and rounded to float32.
"""
import logging
from typing import Optional

import numpy as np
from scipy.stats import truncnorm

from isap.core.errors import DomainError
from isap.core.rng import make_rng
from isap.scenegen.geometry import build_map, drivable_mask, mirrored
from isap.scenegen.scene import FUTURE_LEN, DriveSide, MapGeometry, Regime, Scene, f32
from isap.schemas.experiment import ExperimentKind, GeneratorSection, MapKind

logger = logging.getLogger(__name__)

MAX_ATTEMPTS = 200
ACCEL_STD = 0.5
# integration sub-steps per waypoint interval
SUBSTEPS = 10


def _truncated_normal(rng: np.random.Generator, mean: float, std: float, low: float, high: float) -> float:
    a, b = (low - mean) / std, (high - mean) / std
    return float(truncnorm.rvs(a, b, loc=mean, scale=std, random_state=rng))


def sample_speed(rng: np.random.Generator, config: GeneratorSection, regime: Regime) -> float:
    threshold = config.threshold
    if regime == Regime.OOD:
        return _truncated_normal(rng, config.ood_speed_mean, config.ood_speed_std, threshold, config.v_max)
    if rng.random() < config.stop_fraction:
        return 0.0
    return _truncated_normal(rng, config.id_speed_mean, config.id_speed_std, 0.0, threshold)


def speed_profile(v: float, a: float, times: np.ndarray, noise: np.ndarray, v_max: float) -> np.ndarray:
    return np.clip(v + a * times + noise, 0.0, v_max)


def arc_lengths(v: float, a: float, config: GeneratorSection, rng: Optional[np.random.Generator],
                steps: int, direction: int) -> np.ndarray:
    """Signed arc length at each waypoint time (direction +1 future, -1 past).

    Speed is integrated on a fine grid with the trapezoid rule; future speeds carry
    a random walk of scale speed_noise, past speeds are noise free.
    """
    dt = config.dt
    fine = np.arange(0, steps * SUBSTEPS + 1) * dt / SUBSTEPS * direction
    noise = np.zeros_like(fine)
    if rng is not None and config.speed_noise > 0 and v > 0:
        increments = rng.normal(0.0, config.speed_noise * np.sqrt(dt / SUBSTEPS), fine.size - 1)
        noise[1:] = np.cumsum(increments)
    speeds = speed_profile(v, a, fine, noise, config.v_max)
    s = np.concatenate([[0.0], np.cumsum((speeds[1:] + speeds[:-1]) / 2 * dt / SUBSTEPS)])
    return direction * s[SUBSTEPS::SUBSTEPS]


def _position_noise(rng: np.random.Generator, shape: tuple, scale: float) -> np.ndarray:
    if scale <= 0:
        return np.zeros(shape)
    return np.clip(rng.uniform(-scale, scale, shape), -0.05, 0.05)


def _neighbors(rng: np.random.Generator, config: GeneratorSection, geometry: MapGeometry) -> list[np.ndarray]:
    count = min(int(rng.poisson(config.neighbor_rate)), config.max_neighbors)
    times = (np.arange(config.past_len) - (config.past_len - 1)) * config.dt
    tracks = []
    for _ in range(count):
        for _ in range(20):
            start = np.array([rng.uniform(-12.0, 12.0), rng.uniform(-10.0, 30.0)])
            if drivable_mask(geometry, start[:1], start[1:])[0] and np.hypot(*start) > 3.0:
                break
        direction = 1.0 if rng.random() < 0.5 else -1.0
        speed = float(rng.uniform(0.0, 10.0))
        track = start + np.outer(times, [0.0, direction * speed])
        tracks.append(f32(track + _position_noise(rng, track.shape, config.position_noise)))
    return tracks


def _choose_map(rng: np.random.Generator, config: GeneratorSection, experiment: ExperimentKind,
                regime: Regime) -> tuple[MapKind, DriveSide, bool]:
    kinds = list(config.map_mixture)
    weights = np.array([config.map_mixture[k] for k in kinds], dtype=np.float64)
    if experiment == ExperimentKind.MAP and regime == Regime.OOD:
        kind = MapKind.STRAIGHT if rng.random() < config.leak_fraction else MapKind.ROUNDABOUT
        return kind, DriveSide.RIGHT, True
    kind = kinds[int(rng.choice(len(kinds), p=weights / weights.sum()))]
    if experiment == ExperimentKind.MAP:
        return kind, DriveSide.LEFT, False
    side = DriveSide.LEFT if rng.random() < 0.5 else DriveSide.RIGHT
    return kind, side, False


def _sample(seed: int, attempt: int, config: GeneratorSection, experiment: ExperimentKind, regime: Regime,
            map_kind: Optional[MapKind], drive_side: Optional[DriveSide], speed: Optional[float],
            accel: Optional[float]) -> Scene:
    rng = make_rng(seed, attempt)
    kind, side, tagged = _choose_map(rng, config, experiment, regime)
    kind = map_kind or kind
    side = drive_side or side
    mirror = side == DriveSide.LEFT
    geometry, path = build_map(kind, rng, mirror=False)
    if mirror:
        geometry = mirrored(geometry)

    speed_regime = Regime.ID if experiment == ExperimentKind.MAP else regime
    v = sample_speed(rng, config, speed_regime) if speed is None else float(speed)
    if v < 0:
        raise DomainError(detail=f"speed cannot be negative, got {v}")
    if accel is None:
        accel = 0.0 if v == 0.0 else float(np.clip(rng.normal(0.0, ACCEL_STD), -v / 6.0, 1.0))
    kappa_noise = float(rng.normal(0.0, config.curvature_noise)) if config.curvature_noise > 0 else 0.0

    s_future = arc_lengths(v, accel, config, rng, FUTURE_LEN, +1)
    s_past = arc_lengths(v, accel, config, None, config.past_len - 1, -1)[::-1]
    future = path.sample(s_future, extra_curvature=kappa_noise, mirror=mirror)
    past = np.vstack([path.sample(s_past, extra_curvature=kappa_noise, mirror=mirror), np.zeros((1, 2))])
    future = future + _position_noise(rng, future.shape, config.position_noise)
    past[:-1] = past[:-1] + _position_noise(rng, past[:-1].shape, config.position_noise)

    yaw_rate = v * kappa_noise * (-1.0 if mirror else 1.0)
    state = np.array([v, accel, yaw_rate])
    return Scene(
        seed=int(seed),
        map_kind=kind,
        drive_side=side,
        state=f32(state),
        past=f32(past),
        future=f32(future),
        geometry=MapGeometry(**{**vars(geometry), **{k: float(f32(getattr(geometry, k))) for k in MapGeometry.FIELDS}}),
        neighbors=_neighbors(rng, config, geometry),
        roundabout_tagged=tagged,
    )


def generate_scene(
    seed: int,
    config: GeneratorSection,
    regime: Regime = Regime.ID,
    experiment: ExperimentKind = ExperimentKind.SPEED,
    map_kind: Optional[MapKind] = None,
    drive_side: Optional[DriveSide] = None,
    speed: Optional[float] = None,
    accel: Optional[float] = None,
) -> Scene:
    """Draw one scene; for the speed experiment, resample until the heuristic lands on the regime's side."""
    from isap.scenegen.splits import speed_heuristic

    if speed is not None and speed < 0:
        raise DomainError(detail=f"speed cannot be negative, got {speed}")
    threshold = config.speed_threshold()
    for attempt in range(MAX_ATTEMPTS):
        scene = _sample(seed, attempt, config, experiment, regime, map_kind, drive_side, speed, accel)
        if experiment != ExperimentKind.SPEED or speed is not None:
            return scene
        distance = speed_heuristic(scene, config.speed_window)
        if (distance < threshold) == (regime == Regime.ID):
            return scene
    raise DomainError(detail=f"no {regime.value} scene for seed {seed} after {MAX_ATTEMPTS} attempts")
