from isap.diffcore import ops
from isap.diffcore.gradcheck import grad_check
from isap.diffcore.layers import BatchNorm, Conv2d, ConvTranspose2d, Linear, Module
from isap.diffcore.optim import Adam, AdamState, adam_step
from isap.diffcore.tensor import Graph, Parameter, Tensor, as_tensor, no_grad

__all__ = [
    "Adam",
    "AdamState",
    "BatchNorm",
    "Conv2d",
    "ConvTranspose2d",
    "Graph",
    "Linear",
    "Module",
    "Parameter",
    "Tensor",
    "adam_step",
    "as_tensor",
    "grad_check",
    "no_grad",
    "ops",
]
