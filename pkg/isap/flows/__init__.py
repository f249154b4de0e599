from isap.flows.radial import (
    ClassFlow,
    FlowBank,
    RadialLayer,
    bank_log_densities,
    base_log_density,
    log_density,
    radial_apply,
)

__all__ = [
    "ClassFlow",
    "FlowBank",
    "RadialLayer",
    "bank_log_densities",
    "base_log_density",
    "log_density",
    "radial_apply",
]
