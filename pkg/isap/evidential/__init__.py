from isap.evidential.dirichlet import (
    DEFAULT_BUDGET,
    CertaintyBudget,
    DirichletParams,
    aggregate,
    categorical_entropy,
    categorical_mean,
    certainty_budget,
    dirichlet_entropy,
    expected_loglik,
    kl_to_uniform,
    posterior,
    predict,
    pseudo_counts,
)
from isap.evidential.losses import elbo_loss, total_loss

__all__ = [
    "DEFAULT_BUDGET",
    "CertaintyBudget",
    "DirichletParams",
    "aggregate",
    "categorical_entropy",
    "categorical_mean",
    "certainty_budget",
    "dirichlet_entropy",
    "elbo_loss",
    "expected_loglik",
    "kl_to_uniform",
    "posterior",
    "predict",
    "pseudo_counts",
    "total_loss",
]
