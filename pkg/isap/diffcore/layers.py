from typing import Iterator

import numpy as np

from isap.core.errors import ArtifactError
from isap.diffcore import ops
from isap.diffcore.tensor import Parameter, Tensor


class Module:
    """Parameter container. Attributes that are Parameters, Modules or lists of
    Modules are discovered in assignment order; buffers are plain arrays
    registered through `register_buffer`."""

    def __init__(self):
        self.training = True
        self._buffers: dict[str, np.ndarray] = {}

    def register_buffer(self, name: str, value: np.ndarray):
        self._buffers[name] = np.array(value, dtype=np.float64, copy=True)

    def buffer(self, name: str) -> np.ndarray:
        return self._buffers[name]

    def _children(self) -> Iterator[tuple[str, object]]:
        for name, value in vars(self).items():
            if name.startswith("_"):
                continue
            if isinstance(value, (Parameter, Module)):
                yield name, value
            elif isinstance(value, (list, tuple)) and value and all(isinstance(v, Module) for v in value):
                for i, item in enumerate(value):
                    yield f"{name}.{i}", item

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Parameter]]:
        for name, value in self._children():
            full = f"{prefix}{name}"
            if isinstance(value, Parameter):
                yield full, value
            else:
                yield from value.named_parameters(prefix=f"{full}.")

    def named_buffers(self, prefix: str = "") -> Iterator[tuple[str, np.ndarray]]:
        for name, value in self._buffers.items():
            yield f"{prefix}{name}", value
        for name, value in self._children():
            if isinstance(value, Module):
                yield from value.named_buffers(prefix=f"{prefix}{name}.")

    def parameters(self) -> list[Parameter]:
        return [p for _, p in self.named_parameters()]

    def modules(self) -> Iterator["Module"]:
        yield self
        for _, value in self._children():
            if isinstance(value, Module):
                yield from value.modules()

    def train(self, mode: bool = True) -> "Module":
        for module in self.modules():
            module.training = mode
        return self

    def eval(self) -> "Module":
        return self.train(False)

    def zero_grad(self):
        for p in self.parameters():
            p.grad = None

    def num_parameters(self) -> int:
        return int(sum(p.size for p in self.parameters()))

    def state_dict(self) -> dict[str, np.ndarray]:
        state = {name: p.data.copy() for name, p in self.named_parameters()}
        state.update({name: b.copy() for name, b in self.named_buffers()})
        return state

    def load_state_dict(self, state: dict[str, np.ndarray]):
        params = dict(self.named_parameters())
        expected = set(params) | {name for name, _ in self.named_buffers()}
        missing, unexpected = expected - set(state), set(state) - expected
        if missing or unexpected:
            raise ArtifactError(detail=f"state mismatch: missing={sorted(missing)} unexpected={sorted(unexpected)}")
        for name, p in params.items():
            p.data = np.array(state[name], dtype=np.float64).reshape(p.shape)
        self._load_buffers(state, prefix="")

    def _load_buffers(self, state: dict[str, np.ndarray], prefix: str):
        for name in self._buffers:
            self._buffers[name] = np.array(state[f"{prefix}{name}"], dtype=np.float64).reshape(self._buffers[name].shape)
        for name, value in self._children():
            if isinstance(value, Module):
                value._load_buffers(state, prefix=f"{prefix}{name}.")


class Linear(Module):
    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator):
        super().__init__()
        bound = 1.0 / np.sqrt(in_features)
        self.weight = Parameter(rng.uniform(-bound, bound, (in_features, out_features)))
        self.bias = Parameter(rng.uniform(-bound, bound, out_features))

    def __call__(self, x) -> Tensor:
        return ops.affine(x, self.weight, self.bias)


class Conv2d(Module):
    def __init__(self, in_channels: int, out_channels: int, kernel: int, rng: np.random.Generator,
                 stride: int = 1, padding: int = 0):
        super().__init__()
        bound = 1.0 / np.sqrt(in_channels * kernel * kernel)
        self.weight = Parameter(rng.uniform(-bound, bound, (out_channels, in_channels, kernel, kernel)))
        self.bias = Parameter(rng.uniform(-bound, bound, out_channels))
        self.stride = stride
        self.padding = padding

    def __call__(self, x) -> Tensor:
        return ops.conv2d(x, self.weight, self.bias, stride=self.stride, padding=self.padding)


class ConvTranspose2d(Module):
    def __init__(self, in_channels: int, out_channels: int, kernel: int, rng: np.random.Generator,
                 stride: int = 1, padding: int = 0):
        super().__init__()
        bound = 1.0 / np.sqrt(in_channels * kernel * kernel)
        self.weight = Parameter(rng.uniform(-bound, bound, (in_channels, out_channels, kernel, kernel)))
        self.bias = Parameter(rng.uniform(-bound, bound, out_channels))
        self.stride = stride
        self.padding = padding

    def __call__(self, x) -> Tensor:
        return ops.conv_transpose2d(x, self.weight, self.bias, stride=self.stride, padding=self.padding)


class BatchNorm(Module):
    """Batch normalisation over the last (feature) axis.

    Train mode normalises with the batch's own statistics and updates the running
    estimates with momentum 0.1 (unbiased variance); eval mode is the fixed affine
    map given by the running estimates.
    """

    def __init__(self, features: int, momentum: float = 0.1, eps: float = 1e-5):
        super().__init__()
        self.gamma = Parameter(np.ones(features))
        self.beta = Parameter(np.zeros(features))
        self.momentum = momentum
        self.eps = eps
        self.register_buffer("running_mean", np.zeros(features))
        self.register_buffer("running_var", np.ones(features))

    def __call__(self, x) -> Tensor:
        if self.training:
            data = x.data.reshape(-1, x.shape[-1])
            count = data.shape[0]
            if count > 1:
                m = self.momentum
                self._buffers["running_mean"] = (1 - m) * self._buffers["running_mean"] + m * data.mean(axis=0)
                self._buffers["running_var"] = (1 - m) * self._buffers["running_var"] + m * data.var(axis=0, ddof=1)
        return ops.batch_norm(
            x,
            self.gamma,
            self.beta,
            running_mean=self._buffers["running_mean"],
            running_var=self._buffers["running_var"],
            training=self.training,
            eps=self.eps,
        )
