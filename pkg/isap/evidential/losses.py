from isap.diffcore import Tensor
from isap.evidential.dirichlet import DirichletParams, expected_loglik, kl_to_uniform
from isap.schemas.experiment import LossConfig


def elbo_loss(d: DirichletParams, label, kl_scale: float = 1e-5) -> Tensor:
    """Per-sample negative ELBO; callers average over the batch."""
    return -expected_loglik(d, label) + kl_scale * kl_to_uniform(d)


def total_loss(elbo, rec_agent, rec_map, rec_sc, cfg: LossConfig):
    return (
        elbo
        + cfg.lambda_agent * rec_agent
        + cfg.lambda_map * rec_map
        + cfg.lambda_sc * rec_sc
    )
