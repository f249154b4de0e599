"""Dense float64 tensors with reverse-mode differentiation.

A `Tensor` produced by an op keeps references to its parents and a backward
closure mapping the output adjoint to one adjoint per parent. `Graph` orders the
nodes reachable from a root topologically and runs the backward pass, visiting
each node once.
"""
from contextlib import contextmanager
from contextvars import ContextVar
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from isap.core.errors import NonFiniteError

_grad_enabled: ContextVar[bool] = ContextVar("grad_enabled", default=True)

BackwardFn = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]


@contextmanager
def no_grad():
    token = _grad_enabled.set(False)
    try:
        yield
    finally:
        _grad_enabled.reset(token)


def grad_enabled() -> bool:
    return _grad_enabled.get()


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "parents", "backward_fn", "op")
    __array_ufunc__ = None

    def __init__(
        self,
        data,
        requires_grad: bool = False,
        parents: Sequence["Tensor"] = (),
        backward_fn: Optional[BackwardFn] = None,
        op: str = "leaf",
    ):
        if isinstance(data, Tensor):
            data = data.data
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.parents = tuple(parents)
        self.backward_fn = backward_fn
        self.op = op

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = None

    def backward(self, seed: Optional[np.ndarray] = None):
        Graph(self).backward(seed)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, op={self.op}, requires_grad={self.requires_grad})"

    # Operators delegate to isap.diffcore.ops (imported lazily to avoid a cycle).
    def __add__(self, other):
        from isap.diffcore import ops
        return ops.add(self, other)

    def __radd__(self, other):
        from isap.diffcore import ops
        return ops.add(other, self)

    def __sub__(self, other):
        from isap.diffcore import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from isap.diffcore import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from isap.diffcore import ops
        return ops.mul(self, other)

    def __rmul__(self, other):
        from isap.diffcore import ops
        return ops.mul(other, self)

    def __truediv__(self, other):
        from isap.diffcore import ops
        return ops.div(self, other)

    def __rtruediv__(self, other):
        from isap.diffcore import ops
        return ops.div(other, self)

    def __neg__(self):
        from isap.diffcore import ops
        return ops.neg(self)

    def __matmul__(self, other):
        from isap.diffcore import ops
        return ops.matmul(self, other)

    def __getitem__(self, index):
        from isap.diffcore import ops
        return ops.getitem(self, index)

    def sum(self, axis=None, keepdims: bool = False):
        from isap.diffcore import ops
        return ops.sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False):
        from isap.diffcore import ops
        return ops.mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        from isap.diffcore import ops
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)


class Parameter(Tensor):
    """Trainable leaf tensor."""

    __slots__ = ()

    def __init__(self, data):
        super().__init__(np.array(data, dtype=np.float64, copy=True), requires_grad=True)


def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def make_node(data: np.ndarray, parents: Sequence[Tensor], backward_fn: BackwardFn, op: str) -> Tensor:
    """Wrap an op result; attach the graph only when some parent needs gradients."""
    if not np.all(np.isfinite(data)):
        raise NonFiniteError(detail=f"non-finite output from op '{op}'")
    if grad_enabled() and any(p.requires_grad for p in parents):
        return Tensor(data, requires_grad=True, parents=parents, backward_fn=backward_fn, op=op)
    return Tensor(data, op=op)


class Graph:
    """Topologically ordered view of the nodes that require gradients under `root`."""

    def __init__(self, root: Tensor):
        self.root = root
        self.nodes: list[Tensor] = []
        self.index: dict[int, int] = {}
        if not root.requires_grad:
            return
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                self.index[id(node)] = len(self.nodes)
                self.nodes.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node.parents:
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))

    def parent_indices(self, node: Tensor) -> list[Optional[int]]:
        return [self.index.get(id(p)) for p in node.parents]

    def backward(self, seed: Optional[np.ndarray] = None) -> list[Optional[np.ndarray]]:
        """Accumulate d(root)/d(leaf) into every leaf's `.grad`; returns per-node adjoints."""
        adjoints: list[Optional[np.ndarray]] = [None] * len(self.nodes)
        if not self.nodes:
            return adjoints
        if seed is None:
            seed = np.ones_like(self.root.data)
        adjoints[-1] = np.asarray(seed, dtype=np.float64)
        for i in range(len(self.nodes) - 1, -1, -1):
            node, adjoint = self.nodes[i], adjoints[i]
            if adjoint is None:
                continue
            if node.backward_fn is None:
                node.grad = adjoint.copy() if node.grad is None else node.grad + adjoint
                continue
            parent_grads = node.backward_fn(adjoint)
            for parent, j, g in zip(node.parents, self.parent_indices(node), parent_grads):
                if g is None or j is None:
                    continue
                adjoints[j] = g if adjoints[j] is None else adjoints[j] + g
        return adjoints
