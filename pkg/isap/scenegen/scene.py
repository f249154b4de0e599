"""Scene records and their fixed float32 layout."""
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

import numpy as np

from isap.core.errors import ArtifactError
from isap.schemas.experiment import MapKind

FUTURE_LEN = 12
SEED_CHUNKS = 4
MAP_KINDS = list(MapKind)


class DriveSide(str, Enum):
    LEFT = "left"
    RIGHT = "right"


class Split(str, Enum):
    TRAIN = "train"
    VAL_ID = "val_id"
    TEST_ID = "test_id"
    VAL_OOD = "val_ood"
    TEST_OOD = "test_ood"

    @property
    def is_ood(self) -> bool:
        return self in (Split.VAL_OOD, Split.TEST_OOD)


SPLITS = list(Split)


class Regime(str, Enum):
    ID = "id"
    OOD = "ood"
    EXCLUDED = "excluded"


def f32(values) -> np.ndarray:
    """Round to the nearest float32 so stored payloads round-trip exactly."""
    return np.asarray(values, dtype=np.float64).astype(np.float32).astype(np.float64)


@dataclass
class MapGeometry:
    """Drivable-area primitives in the agent frame (x right, y forward).

    road_offset/road_half_width describe the band the agent drives on; a crossing
    band sits at y = cross_y for intersections; roundabouts add an annulus around
    (ring_x, ring_y). `mirror` records a left-side scene built by reflecting x.
    """

    kind: MapKind
    lane_width: float = 3.5
    road_offset: float = 0.0
    road_half_width: float = 3.5
    road_end: float = np.inf
    cross_y: float = np.nan
    ring_x: float = np.nan
    ring_y: float = np.nan
    ring_radius: float = np.nan
    mirror: bool = False

    FIELDS = ("lane_width", "road_offset", "road_half_width", "road_end", "cross_y", "ring_x", "ring_y", "ring_radius")

    def to_vector(self) -> np.ndarray:
        values = [getattr(self, name) for name in self.FIELDS] + [float(self.mirror)]
        return np.nan_to_num(np.array(values, dtype=np.float64), nan=-1.0, posinf=-1.0)

    @classmethod
    def from_vector(cls, kind: MapKind, vector: np.ndarray) -> "MapGeometry":
        values = dict(zip(cls.FIELDS, (float(v) for v in vector[: len(cls.FIELDS)])))
        if values["road_end"] < 0:
            values["road_end"] = np.inf
        for name in ("cross_y", "ring_x", "ring_y", "ring_radius"):
            if values[name] == -1.0 and not cls._uses(kind, name):
                values[name] = np.nan
        return cls(kind=kind, mirror=bool(vector[len(cls.FIELDS)]), **values)

    @staticmethod
    def _uses(kind: MapKind, name: str) -> bool:
        if name == "cross_y":
            return kind == MapKind.INTERSECTION
        return kind == MapKind.ROUNDABOUT

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, MapGeometry)
            and self.kind == other.kind
            and np.array_equal(self.to_vector(), other.to_vector())
        )


GEOMETRY_LEN = len(MapGeometry.FIELDS) + 1


@dataclass
class Scene:
    seed: int
    map_kind: MapKind
    drive_side: DriveSide
    state: np.ndarray
    past: np.ndarray
    future: np.ndarray
    geometry: MapGeometry
    neighbors: List[np.ndarray] = field(default_factory=list)
    roundabout_tagged: bool = False
    split: Optional[Split] = None

    @property
    def past_len(self) -> int:
        return self.past.shape[0]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Scene)
            and self.seed == other.seed
            and self.map_kind == other.map_kind
            and self.drive_side == other.drive_side
            and self.split == other.split
            and self.roundabout_tagged == other.roundabout_tagged
            and self.geometry == other.geometry
            and np.array_equal(self.state, other.state)
            and np.array_equal(self.past, other.past)
            and np.array_equal(self.future, other.future)
            and len(self.neighbors) == len(other.neighbors)
            and all(np.array_equal(a, b) for a, b in zip(self.neighbors, other.neighbors))
        )


@dataclass(frozen=True)
class RecordLayout:
    past_len: int
    max_neighbors: int

    @property
    def fields(self) -> list[tuple[str, int]]:
        return [
            ("seed", SEED_CHUNKS),
            ("map_kind", 1),
            ("drive_side", 1),
            ("split", 1),
            ("roundabout_tag", 1),
            ("n_neighbors", 1),
            ("geometry", GEOMETRY_LEN),
            ("state", 3),
            ("past", 2 * self.past_len),
            ("future", 2 * FUTURE_LEN),
            ("neighbors", 2 * self.past_len * self.max_neighbors),
        ]

    @property
    def width(self) -> int:
        return sum(length for _, length in self.fields)

    def offsets(self) -> dict[str, tuple[int, int]]:
        out, offset = {}, 0
        for name, length in self.fields:
            out[name] = (offset, length)
            offset += length
        return out


def _seed_chunks(seed: int) -> list[float]:
    return [float((seed >> (16 * i)) & 0xFFFF) for i in range(SEED_CHUNKS)]


def _seed_from_chunks(chunks: np.ndarray) -> int:
    return sum(int(c) << (16 * i) for i, c in enumerate(chunks))


def encode_scene(scene: Scene, layout: RecordLayout) -> np.ndarray:
    if scene.past_len != layout.past_len or len(scene.neighbors) > layout.max_neighbors:
        raise ArtifactError(detail=f"scene {scene.seed} does not fit record layout {layout}")
    row = np.zeros(layout.width, dtype=np.float64)
    offsets = layout.offsets()

    def put(name: str, values):
        start, length = offsets[name]
        row[start:start + length] = np.asarray(values, dtype=np.float64).reshape(-1)[:length]

    put("seed", _seed_chunks(scene.seed))
    put("map_kind", [MAP_KINDS.index(scene.map_kind)])
    put("drive_side", [0.0 if scene.drive_side == DriveSide.LEFT else 1.0])
    put("split", [-1.0 if scene.split is None else SPLITS.index(scene.split)])
    put("roundabout_tag", [float(scene.roundabout_tagged)])
    put("n_neighbors", [len(scene.neighbors)])
    put("geometry", scene.geometry.to_vector())
    put("state", scene.state)
    put("past", scene.past)
    put("future", scene.future)
    if scene.neighbors:
        put("neighbors", np.concatenate([n.reshape(-1) for n in scene.neighbors]))
    return row


def decode_scene(row: np.ndarray, layout: RecordLayout) -> Scene:
    row = np.asarray(row, dtype=np.float64)
    offsets = layout.offsets()

    def get(name: str) -> np.ndarray:
        start, length = offsets[name]
        return row[start:start + length].copy()

    kind = MAP_KINDS[int(get("map_kind")[0])]
    split_index = int(get("split")[0])
    n_neighbors = int(get("n_neighbors")[0])
    tracks = get("neighbors").reshape(layout.max_neighbors, layout.past_len, 2) if layout.max_neighbors else []
    return Scene(
        seed=_seed_from_chunks(get("seed")),
        map_kind=kind,
        drive_side=DriveSide.LEFT if get("drive_side")[0] == 0.0 else DriveSide.RIGHT,
        split=None if split_index < 0 else SPLITS[split_index],
        roundabout_tagged=bool(get("roundabout_tag")[0]),
        geometry=MapGeometry.from_vector(kind, get("geometry")),
        state=get("state"),
        past=get("past").reshape(layout.past_len, 2),
        future=get("future").reshape(FUTURE_LEN, 2),
        neighbors=[np.array(tracks[i]) for i in range(n_neighbors)],
    )
