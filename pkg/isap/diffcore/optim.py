"""Adam with decoupled weight decay."""
from dataclasses import dataclass, field

import numpy as np

from isap.core.errors import NonFiniteError, ShapeMismatchError
from isap.diffcore.tensor import Parameter


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)


def adam_step(state: AdamState, params: list[Parameter], grads: list[np.ndarray]) -> AdamState:
    """One in-place update of `params`.

    The decay term shrinks each parameter by lr * weight_decay before the
    bias-corrected moment update; it never enters the moment estimates.
    """
    if len(params) != len(grads):
        raise ShapeMismatchError(detail=f"{len(params)} parameters but {len(grads)} gradients")
    for g in grads:
        if not np.all(np.isfinite(g)):
            raise NonFiniteError(detail="non-finite gradient passed to the optimizer")
    if not state.m:
        state.m = [np.zeros_like(p.data) for p in params]
        state.v = [np.zeros_like(p.data) for p in params]

    state.step += 1
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1 ** state.step
    correction2 = 1.0 - b2 ** state.step
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if state.weight_decay:
            p.data -= state.lr * state.weight_decay * p.data
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        m_hat = m / correction1
        v_hat = v / correction2
        p.data -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return state


class Adam:
    def __init__(self, params: list[Parameter], lr: float = 1e-3, weight_decay: float = 0.0,
                 betas: tuple[float, float] = (0.9, 0.999), eps: float = 1e-8):
        self.params = list(params)
        self.state = AdamState(lr=lr, beta1=betas[0], beta2=betas[1], eps=eps, weight_decay=weight_decay)

    def step(self):
        grads = [p.grad if p.grad is not None else np.zeros_like(p.data) for p in self.params]
        adam_step(self.state, self.params, grads)

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def state_dict(self) -> dict[str, np.ndarray]:
        state = {"step": np.array(self.state.step, dtype=np.float64)}
        for i, (m, v) in enumerate(zip(self.state.m, self.state.v)):
            state[f"m.{i}"] = m.copy()
            state[f"v.{i}"] = v.copy()
        return state
