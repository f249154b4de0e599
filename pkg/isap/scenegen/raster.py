"""Bird's-eye-view rendering.

Channel 0 holds the drivable area sampled at pixel centres; channels 1 and 2 hold
neighbour and ego past tracks drawn with Pillow as polylines whose intensity fades
linearly from the oldest to the newest point.
"""
import logging
from typing import Iterable, Optional

import numpy as np
from PIL import Image, ImageDraw

from isap.scenegen.geometry import drivable_mask
from isap.scenegen.scene import Scene
from isap.schemas.experiment import RasterSection

logger = logging.getLogger(__name__)

MAP_CHANNEL = 0
SOCIAL_CHANNEL = 1
EGO_CHANNEL = 2
# fraction of the image height in front of the agent
FORWARD_FRACTION = 0.75


class RasterRenderer:
    def __init__(self, size: int = 64, extent: float = 40.0):
        self.size = size
        self.extent = extent
        self.meters_per_pixel = extent / size
        offsets = np.arange(size) - (size - 1) / 2
        # pixel-centre coordinates; columns are antisymmetric about x = 0
        self.xs = offsets * self.meters_per_pixel
        self.ys = (size * (FORWARD_FRACTION - 0.5) - offsets) * self.meters_per_pixel

    @classmethod
    def from_config(cls, config: RasterSection) -> "RasterRenderer":
        return cls(size=config.size, extent=config.extent)

    def _to_pixels(self, points: np.ndarray) -> list[tuple[float, float]]:
        """Agent-frame metres to Pillow (column, row) coordinates of pixel centres."""
        mpp = self.meters_per_pixel
        cols = points[:, 0] / mpp + (self.size - 1) / 2
        rows = (self.size - 1) / 2 + self.size * (FORWARD_FRACTION - 0.5) - points[:, 1] / mpp
        return [(float(c), float(r)) for c, r in zip(cols, rows)]

    def _draw_trails(self, tracks: Iterable[np.ndarray]) -> np.ndarray:
        image = Image.new("L", (self.size, self.size), 0)
        draw = ImageDraw.Draw(image)
        for track in tracks:
            pixels = self._to_pixels(track)
            n = len(pixels)
            for k in range(n):
                # oldest point is dimmest, newest is full intensity
                shade = int(round(255 * (k + 1) / n))
                if k == 0:
                    draw.point([pixels[0]], fill=shade)
                else:
                    draw.line([pixels[k - 1], pixels[k]], fill=shade, width=1)
        return np.asarray(image, dtype=np.float64) / 255.0

    def _draw_map(self, scene: Scene) -> np.ndarray:
        x, y = np.meshgrid(self.xs, self.ys)
        return drivable_mask(scene.geometry, x, y).astype(np.float64)

    def render(self, scene: Scene) -> np.ndarray:
        """H x W x 3 raster in [0, 1]."""
        raster = np.zeros((self.size, self.size, 3))
        raster[..., MAP_CHANNEL] = self._draw_map(scene)
        if scene.neighbors:
            raster[..., SOCIAL_CHANNEL] = self._draw_trails(scene.neighbors)
        raster[..., EGO_CHANNEL] = self._draw_trails([scene.past])
        return raster


def rasterize(scene: Scene, config: Optional[RasterSection] = None) -> np.ndarray:
    renderer = RasterRenderer.from_config(config) if config is not None else default_renderer
    return renderer.render(scene)


def rasterize_many(scenes: list[Scene], config: Optional[RasterSection] = None) -> np.ndarray:
    """Stacked N x 3 x H x W batch (channels first, as the networks expect)."""
    renderer = RasterRenderer.from_config(config) if config is not None else default_renderer
    if not scenes:
        return np.zeros((0, 3, renderer.size, renderer.size))
    return np.stack([renderer.render(s).transpose(2, 0, 1) for s in scenes])


# Global instance
default_renderer = RasterRenderer()
