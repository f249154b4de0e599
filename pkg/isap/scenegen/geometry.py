"""Reference paths and drivable areas, built in the right-hand-traffic frame.

Paths are sequences of (length, curvature) segments traced from the origin with
heading +y; positive curvature turns left. Left-side scenes are the mirror image
(x -> -x) of a right-hand construction.
"""
import math
from dataclasses import dataclass

import numpy as np

from isap.scenegen.scene import MapGeometry
from isap.schemas.experiment import MapKind

PATH_STEP = 0.05


@dataclass
class ReferencePath:
    segments: list[tuple[float, float]]
    # curvature used behind the origin (the path before the current pose)
    tail_curvature: float = 0.0

    def sample(self, s: np.ndarray, extra_curvature: float = 0.0, mirror: bool = False) -> np.ndarray:
        """Positions at arc lengths `s` (negative values walk back along the tail)."""
        s = np.asarray(s, dtype=np.float64)
        out = np.zeros(s.shape + (2,))
        ahead = s >= 0
        if np.any(ahead):
            out[ahead] = self._trace(self.segments, s[ahead], extra_curvature)
        if np.any(~ahead):
            tail = [(np.inf, -(self.tail_curvature + extra_curvature))]
            back = self._trace(tail, -s[~ahead], 0.0)
            # walking backwards: heading -y, curvature sign flips with direction
            out[~ahead] = np.stack([-back[:, 0], -back[:, 1]], axis=-1)
        if mirror:
            out[..., 0] = -out[..., 0]
        return out

    @staticmethod
    def _trace(segments: list[tuple[float, float]], s: np.ndarray, extra: float) -> np.ndarray:
        """Exact pose integration over piecewise-constant curvature."""
        s = np.asarray(s, dtype=np.float64)
        out = np.empty(s.shape + (2,))
        order = np.argsort(s, kind="stable")
        x, y, theta, start = 0.0, 0.0, math.pi / 2, 0.0
        seg_iter = iter(segments)
        length, kappa = next(seg_iter)
        kappa += extra
        for idx in order:
            target = float(s[idx])
            while target > start + length:
                x, y, theta = _advance(x, y, theta, length, kappa)
                start += length
                try:
                    length, kappa = next(seg_iter)
                    kappa += extra
                except StopIteration:
                    length, kappa = np.inf, extra
            px, py, _ = _advance(x, y, theta, target - start, kappa)
            out[idx] = (px, py)
        return out


def _advance(x: float, y: float, theta: float, ds: float, kappa: float) -> tuple[float, float, float]:
    if abs(kappa) < 1e-12:
        return x + ds * math.cos(theta), y + ds * math.sin(theta), theta
    new_theta = theta + kappa * ds
    x += (math.sin(new_theta) - math.sin(theta)) / kappa
    y -= (math.cos(new_theta) - math.cos(theta)) / kappa
    return x, y, new_theta


def build_map(kind: MapKind, rng: np.random.Generator, mirror: bool) -> tuple[MapGeometry, ReferencePath]:
    lane = float(rng.uniform(3.0, 4.0))
    if kind == MapKind.STRAIGHT:
        lanes = int(rng.integers(1, 3)) * 2
        geometry = MapGeometry(kind=kind, lane_width=lane, road_offset=0.0, road_half_width=lanes * lane / 2)
        return geometry, ReferencePath(segments=[(np.inf, 0.0)])

    if kind == MapKind.MULTILANE:
        lanes = int(rng.integers(3, 5))
        own = int(rng.integers(0, lanes))
        # lane 0 is the outermost lane on the driving side
        center = (lanes / 2 - own - 0.5) * lane
        geometry = MapGeometry(kind=kind, lane_width=lane, road_offset=-center, road_half_width=lanes * lane / 2)
        return geometry, ReferencePath(segments=[(np.inf, 0.0)])

    if kind == MapKind.INTERSECTION:
        maneuver = int(rng.integers(0, 3))
        radius = [0.0, 10.0, 6.0][maneuver]
        cross_y = float(rng.uniform(radius + 4.0, 25.0))
        geometry = MapGeometry(
            kind=kind, lane_width=lane, road_offset=-lane / 2, road_half_width=lane, cross_y=cross_y
        )
        if maneuver == 0:
            return geometry, ReferencePath(segments=[(np.inf, 0.0)])
        turn = 1.0 / radius if maneuver == 1 else -1.0 / radius
        # the turn finishes on the crossing road's driving-side lane
        lead = cross_y - radius + (lane / 2 if maneuver == 1 else -lane / 2)
        return geometry, ReferencePath(segments=[(lead, 0.0), (math.pi / 2 * radius, turn), (np.inf, 0.0)])

    entry_radius = float(rng.uniform(5.0, 8.0))
    ring_radius = float(rng.uniform(10.0, 18.0))
    entry = float(rng.uniform(4.0, 15.0))
    sweep = float(rng.uniform(0.5, 1.5)) * math.pi
    geometry = MapGeometry(
        kind=kind,
        lane_width=lane,
        road_offset=0.0,
        road_half_width=lane,
        road_end=entry + entry_radius,
        ring_x=entry_radius,
        ring_y=entry + entry_radius + ring_radius,
        ring_radius=ring_radius,
    )
    segments = [
        (entry, 0.0),
        (math.pi / 2 * entry_radius, -1.0 / entry_radius),
        (sweep * ring_radius, 1.0 / ring_radius),
        (math.pi / 2 * entry_radius, -1.0 / entry_radius),
        (np.inf, 0.0),
    ]
    return geometry, ReferencePath(segments=segments)


def mirrored(geometry: MapGeometry) -> MapGeometry:
    return MapGeometry(
        kind=geometry.kind,
        lane_width=geometry.lane_width,
        road_offset=-geometry.road_offset,
        road_half_width=geometry.road_half_width,
        road_end=geometry.road_end,
        cross_y=geometry.cross_y,
        ring_x=-geometry.ring_x,
        ring_y=geometry.ring_y,
        ring_radius=geometry.ring_radius,
        mirror=not geometry.mirror,
    )


def drivable_mask(geometry: MapGeometry, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Boolean drivable area evaluated at points (x, y)."""
    mask = (np.abs(x - geometry.road_offset) <= geometry.road_half_width) & (y <= geometry.road_end)
    if geometry.kind == MapKind.INTERSECTION:
        mask |= np.abs(y - geometry.cross_y) <= geometry.lane_width
    if geometry.kind == MapKind.ROUNDABOUT:
        dist = np.hypot(x - geometry.ring_x, y - geometry.ring_y)
        mask |= np.abs(dist - geometry.ring_radius) <= geometry.lane_width
    return mask
