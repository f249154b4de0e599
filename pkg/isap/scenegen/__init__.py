from isap.scenegen.generator import generate_scene
from isap.scenegen.raster import RasterRenderer, rasterize, rasterize_many
from isap.scenegen.scene import DriveSide, MapGeometry, RecordLayout, Regime, Scene, Split
from isap.scenegen.splits import generate_dataset, speed_heuristic, split_counts, split_map, split_speed

__all__ = [
    "DriveSide",
    "MapGeometry",
    "RasterRenderer",
    "RecordLayout",
    "Regime",
    "Scene",
    "Split",
    "generate_dataset",
    "generate_scene",
    "rasterize",
    "rasterize_many",
    "speed_heuristic",
    "split_counts",
    "split_map",
    "split_speed",
]
