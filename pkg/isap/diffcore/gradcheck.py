from typing import Callable

import numpy as np

from isap.core.errors import DomainError
from isap.diffcore.tensor import Tensor, no_grad

MIN_STEP = 1e-6
MAX_STEP = 1e-4


def grad_check(f: Callable[[Tensor], Tensor], x: np.ndarray, h: float = 1e-5) -> float:
    """Largest relative gap between the reverse-mode gradient of scalar f at x and a
    central finite difference with step h, taken per coordinate:
    max_i |auto_i - fd_i| / max(1, |fd_i|)."""
    if not MIN_STEP <= h <= MAX_STEP:
        raise DomainError(detail=f"finite-difference step {h} outside [{MIN_STEP}, {MAX_STEP}]")
    x = np.array(x, dtype=np.float64, copy=True)

    leaf = Tensor(x, requires_grad=True)
    out = f(leaf)
    if out.size != 1:
        raise DomainError(detail=f"grad_check needs a scalar function, got shape {out.shape}")
    out.backward()
    auto = leaf.grad if leaf.grad is not None else np.zeros_like(x)

    fd = np.zeros_like(x)
    flat, fd_flat = x.reshape(-1), fd.reshape(-1)
    with no_grad():
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + h
            up = f(Tensor(x)).item()
            flat[i] = original - h
            down = f(Tensor(x)).item()
            flat[i] = original
            fd_flat[i] = (up - down) / (2.0 * h)

    return float(np.max(np.abs(auto - fd) / np.maximum(1.0, np.abs(fd))))
