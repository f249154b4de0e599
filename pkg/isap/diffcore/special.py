"""Vectorised digamma, trigamma and log-gamma for positive arguments.

All three shift the argument upward with the recurrences

    psi(x)  = psi(x + 1) - 1/x
    psi1(x) = psi1(x + 1) + 1/x**2
    lgamma(x) = lgamma(x + 1) - log(x)

until every entry is at least SHIFT_TO, then evaluate the asymptotic (Stirling /
de Moivre) series truncated after the x**-14 Bernoulli term. At x >= 6 the first
omitted term is below 1e-12, so digamma and trigamma are accurate to ~1e-13 absolute
on [1e-3, 1e6]. lgamma is accurate to ~1e-14 relative; absolute error grows with
|lgamma(x)| once that exceeds the float64 ulp (around x > 1e5).
"""
import math

import numpy as np

from isap.core.errors import DomainError

SHIFT_TO = 6.0
HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _prepare(x) -> np.ndarray:
    x = np.array(x, dtype=np.float64, copy=True).reshape(-1)
    if not np.all(np.isfinite(x)) or np.any(x <= 0.0):
        raise DomainError(detail="special functions are defined here for finite positive arguments only")
    return x


def digamma(x) -> np.ndarray:
    shape = np.shape(x)
    x = _prepare(x)
    acc = np.zeros_like(x)
    small = x < SHIFT_TO
    while np.any(small):
        acc[small] -= 1.0 / x[small]
        x[small] += 1.0
        small = x < SHIFT_TO
    inv = 1.0 / x
    inv2 = inv * inv
    series = inv2 * (1.0 / 12 - inv2 * (1.0 / 120 - inv2 * (1.0 / 252 - inv2 * (
        1.0 / 240 - inv2 * (1.0 / 132 - inv2 * (691.0 / 32760 - inv2 / 12))))))
    return (acc + np.log(x) - 0.5 * inv - series).reshape(shape)


def trigamma(x) -> np.ndarray:
    shape = np.shape(x)
    x = _prepare(x)
    acc = np.zeros_like(x)
    small = x < SHIFT_TO
    while np.any(small):
        acc[small] += 1.0 / (x[small] * x[small])
        x[small] += 1.0
        small = x < SHIFT_TO
    inv = 1.0 / x
    inv2 = inv * inv
    series = inv * inv2 * (1.0 / 6 - inv2 * (1.0 / 30 - inv2 * (1.0 / 42 - inv2 * (
        1.0 / 30 - inv2 * (5.0 / 66 - inv2 * (691.0 / 2730 - inv2 * 7.0 / 6))))))
    return (acc + inv + 0.5 * inv2 + series).reshape(shape)


def lgamma(x) -> np.ndarray:
    shape = np.shape(x)
    x = _prepare(x)
    acc = np.zeros_like(x)
    small = x < SHIFT_TO
    while np.any(small):
        acc[small] -= np.log(x[small])
        x[small] += 1.0
        small = x < SHIFT_TO
    inv = 1.0 / x
    inv2 = inv * inv
    series = inv * (1.0 / 12 - inv2 * (1.0 / 360 - inv2 * (1.0 / 1260 - inv2 * (
        1.0 / 1680 - inv2 * (1.0 / 1188 - inv2 * (691.0 / 360360 - inv2 / 156))))))
    return (acc + (x - 0.5) * np.log(x) - x + HALF_LOG_2PI + series).reshape(shape)
