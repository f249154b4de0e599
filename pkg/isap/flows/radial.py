"""Radial normalizing flows over small latent spaces.

    y = z + beta * h(alpha, r) * (z - z0),   h = 1 / (alpha + r),   r = |z - z0|

Each layer stores parameters for a whole bank of classes at once (leading class
axis), so one pass over a batch yields every class-conditional log-density.
Densities are evaluated in the normalizing direction (data -> base), which is
the only direction the evidential heads need.
"""
import logging
import math
from typing import Optional

import numpy as np

from isap.diffcore import BatchNorm, Module, Parameter, Tensor, ops
from isap.diffcore.tensor import as_tensor

logger = logging.getLogger(__name__)

# softplus(x) == 1
SOFTPLUS_INV_ONE = math.log(math.e - 1.0)
LOG_2PI = math.log(2.0 * math.pi)


class RadialLayer(Module):
    def __init__(self, dim: int, classes: int, rng: np.random.Generator, z0_scale: float = 0.1):
        super().__init__()
        self.dim = dim
        self.classes = classes
        self.z0 = Parameter(rng.normal(0.0, z0_scale, (classes, dim)))
        self.alpha_raw = Parameter(np.full(classes, SOFTPLUS_INV_ONE))
        self.beta_raw = Parameter(np.full(classes, SOFTPLUS_INV_ONE))

    def effective(self) -> tuple[Tensor, Tensor]:
        """(alpha_hat, beta_hat) with alpha_hat > 0 and beta_hat > -alpha_hat."""
        alpha = ops.softplus(self.alpha_raw)
        beta = ops.softplus(self.beta_raw) - alpha
        return alpha, beta


def radial_apply(z, layer: RadialLayer) -> tuple[Tensor, Tensor]:
    """Push z (..., classes, dim) through one layer; returns (y, logdet (..., classes)).
    A singleton class axis on z broadcasts against the layer's classes.

    At z == z0 the distance is exactly zero and the formula reduces to the
    limit y = z, logdet = dim * log(1 + beta/alpha); the norm adjoint there is 0.
    """
    z = as_tensor(z)
    alpha, beta = layer.effective()
    dz = z - layer.z0
    r = ops.norm(dz, axis=-1)
    h = 1.0 / (alpha + r)
    beta_h = beta * h
    y = z + ops.reshape(beta_h, beta_h.shape + (1,)) * dz
    shrink = beta * r / ops.square(alpha + r)
    logdet = (layer.dim - 1) * ops.log(1.0 + beta_h) + ops.log(1.0 + beta_h - shrink)
    return y, logdet


def base_log_density(y) -> Tensor:
    y = as_tensor(y)
    dim = y.shape[-1]
    return -0.5 * dim * LOG_2PI - 0.5 * ops.sum(ops.square(y), axis=-1)


class ClassFlow(Module):
    """K radial layers over a standard normal base, vectorised over `classes`.

    A single class-conditional flow is the `classes=1` case.
    """

    def __init__(self, dim: int, layers: int, rng: np.random.Generator, classes: int = 1):
        super().__init__()
        self.dim = dim
        self.classes = classes
        self.layers = [RadialLayer(dim, classes, rng) for _ in range(layers)]

    def log_density(self, z) -> Tensor:
        """z (..., dim) -> (..., classes)."""
        z = as_tensor(z)
        z = ops.reshape(z, z.shape[:-1] + (1, self.dim))
        total: Optional[Tensor] = None
        for layer in self.layers:
            z, logdet = radial_apply(z, layer)
            total = logdet if total is None else total + logdet
        density = base_log_density(z)
        if total is not None:
            density = density + total
        elif density.shape[-1] != self.classes:
            density = density + np.zeros(self.classes)
        return density


def log_density(z, flow: ClassFlow) -> Tensor:
    return flow.log_density(z)


class FlowBank(Module):
    """Shared batch-norm over the latent followed by one flow per class."""

    def __init__(self, dim: int, classes: int, layers: int, rng: np.random.Generator):
        super().__init__()
        self.dim = dim
        self.classes = classes
        self.norm = BatchNorm(dim)
        self.flow = ClassFlow(dim, layers, rng, classes=classes)

    def __call__(self, z) -> Tensor:
        return bank_log_densities(z, self)


def bank_log_densities(z, bank: FlowBank) -> Tensor:
    """z (N, dim) -> (N, classes) of log r(z | c)."""
    return bank.flow.log_density(bank.norm(z))
