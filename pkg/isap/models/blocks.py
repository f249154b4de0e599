"""Network building blocks shared by every model kind."""
import math

import numpy as np

from isap.core.errors import ShapeMismatchError
from isap.diffcore import Conv2d, ConvTranspose2d, Linear, Module, Tensor, ops

BACKBONE_CHANNELS = (3, 8, 16, 32, 64)
# [v (m/s), a (m/s^2), h (rad/s)] scaled to unit order
STATE_SCALE = np.array([10.0, 2.0, 0.5])
PAST_SCALE = 10.0
DECODER_SEED_CHANNELS = 8
DECODER_SEED_SIZE = 4


def normalize_state(state: np.ndarray) -> np.ndarray:
    return np.asarray(state, dtype=np.float64) / STATE_SCALE


class Backbone(Module):
    """Four stride-2 conv blocks, then average pooling to 2 x 2 and flattening."""

    def __init__(self, raster_size: int, rng: np.random.Generator):
        super().__init__()
        reduced = raster_size // 2 ** (len(BACKBONE_CHANNELS) - 1)
        if reduced < 2 or reduced % 2:
            raise ShapeMismatchError(detail=f"raster size {raster_size} too small for the backbone")
        self.pool = reduced // 2
        self.convs = [
            Conv2d(c_in, c_out, 3, rng, stride=2, padding=1)
            for c_in, c_out in zip(BACKBONE_CHANNELS[:-1], BACKBONE_CHANNELS[1:])
        ]
        self.out_features = BACKBONE_CHANNELS[-1] * 4

    def __call__(self, raster) -> Tensor:
        x = raster
        for conv in self.convs:
            x = ops.relu(conv(x))
        if self.pool > 1:
            x = ops.avg_pool2d(x, self.pool)
        return ops.reshape(x, (x.shape[0], -1))


class MLPHead(Module):
    """affine + relu, then affine; exposes the hidden activation."""

    def __init__(self, in_features: int, hidden: int, out_features: int, rng: np.random.Generator):
        super().__init__()
        self.hidden = Linear(in_features, hidden, rng)
        self.out = Linear(hidden, out_features, rng)

    def __call__(self, x) -> tuple[Tensor, Tensor]:
        pre = ops.relu(self.hidden(x))
        return pre, self.out(pre)


class AgentDecoder(Module):
    """z_agent -> past waypoints (scaled by 10 m) followed by the normalized state."""

    def __init__(self, latent_dim: int, past_len: int, rng: np.random.Generator, hidden: int = 32):
        super().__init__()
        self.hidden = Linear(latent_dim, hidden, rng)
        self.out = Linear(hidden, 2 * past_len + 3, rng)

    def __call__(self, z) -> Tensor:
        return self.out(ops.tanh(self.hidden(z)))


class RasterDecoder(Module):
    """Pre-latent feature -> one H x W channel in [0, 1] through 2x upsampling stages."""

    def __init__(self, in_features: int, raster_size: int, rng: np.random.Generator):
        super().__init__()
        stages = int(round(math.log2(raster_size / DECODER_SEED_SIZE)))
        if DECODER_SEED_SIZE * 2 ** stages != raster_size:
            raise ShapeMismatchError(detail=f"raster size {raster_size} is not {DECODER_SEED_SIZE} * 2^k")
        self.seed = Linear(in_features, DECODER_SEED_CHANNELS * DECODER_SEED_SIZE ** 2, rng)
        channels = [DECODER_SEED_CHANNELS] * stages + [1]
        self.ups = [
            ConvTranspose2d(c_in, c_out, 4, rng, stride=2, padding=1)
            for c_in, c_out in zip(channels[:-1], channels[1:])
        ]
        self.size = raster_size

    def __call__(self, feature) -> Tensor:
        x = ops.relu(self.seed(feature))
        x = ops.reshape(x, (x.shape[0], DECODER_SEED_CHANNELS, DECODER_SEED_SIZE, DECODER_SEED_SIZE))
        for i, up in enumerate(self.ups):
            x = up(x)
            if i < len(self.ups) - 1:
                x = ops.relu(x)
        return ops.reshape(ops.sigmoid(x), (x.shape[0], self.size, self.size))


def sum_squared_error(prediction, target) -> Tensor:
    """Per-sample SSE over every non-batch axis."""
    diff = ops.square(prediction - target)
    return ops.sum(ops.reshape(diff, (diff.shape[0], -1)), axis=1)
