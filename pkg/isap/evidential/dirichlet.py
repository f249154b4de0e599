"""Dirichlet posterior over anchor classes built from flow densities.

    beta_c  = N_c * r(z | c)          (pseudo-counts, N_c from the certainty budget)
    alpha_c = 1 + beta_c              (uninformative prior plus evidence)
    xi_c    = alpha_c / alpha_0       (categorical mean)

Every function is batched over leading axes; the class axis is last.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from isap.core.errors import DomainError, ShapeMismatchError
from isap.diffcore import Tensor, ops
from isap.diffcore import special
from isap.diffcore.tensor import as_tensor

logger = logging.getLogger(__name__)

DEFAULT_BUDGET = math.exp(6.0)
LOG_EVIDENCE_CAP = 30.0


@dataclass(frozen=True)
class CertaintyBudget:
    n: np.ndarray
    total: float

    @property
    def log_n(self) -> np.ndarray:
        return np.log(np.where(self.n > 0, self.n, 1.0))

    @property
    def mask(self) -> np.ndarray:
        return (self.n > 0).astype(np.float64)


@dataclass
class DirichletParams:
    alpha: Tensor

    @property
    def classes(self) -> int:
        return self.alpha.shape[-1]

    @property
    def alpha0(self) -> Tensor:
        return ops.sum(self.alpha, axis=-1)


def certainty_budget(class_counts, total: float = DEFAULT_BUDGET) -> CertaintyBudget:
    counts = np.asarray(class_counts, dtype=np.float64)
    if np.any(counts < 0):
        raise DomainError(detail="class counts cannot be negative")
    if counts.sum() <= 0:
        raise DomainError(detail="certainty budget needs at least one labelled sample")
    return CertaintyBudget(n=total * counts / counts.sum(), total=float(total))


def pseudo_counts(log_r, budget: CertaintyBudget) -> Tensor:
    """N_c * r(z|c) evaluated in log space, capped at exp(30); classes with N_c = 0 get 0."""
    log_r = as_tensor(log_r)
    log_beta = log_r + budget.log_n
    clamped = int(np.count_nonzero(log_beta.data > LOG_EVIDENCE_CAP))
    if clamped:
        logger.warning(f"Pseudo-count clamp active on {clamped} entries (log evidence > {LOG_EVIDENCE_CAP})")
    return ops.exp(ops.clamp_max(log_beta, LOG_EVIDENCE_CAP)) * budget.mask


def posterior(beta) -> DirichletParams:
    beta = as_tensor(beta)
    if np.any(beta.data < 0):
        raise DomainError(detail="pseudo-counts must be nonnegative")
    return DirichletParams(alpha=beta + 1.0)


def aggregate(agent: DirichletParams, map_: DirichletParams, social: DirichletParams) -> DirichletParams:
    """Equal-weight average of the three concept posteriors."""
    shapes = {agent.alpha.shape, map_.alpha.shape, social.alpha.shape}
    if len(shapes) != 1:
        raise ShapeMismatchError(detail=f"cannot aggregate Dirichlet parameters of shapes {sorted(shapes)}")
    return DirichletParams(alpha=(agent.alpha + map_.alpha + social.alpha) / 3.0)


def categorical_mean(d: DirichletParams) -> Tensor:
    return d.alpha / ops.reshape(d.alpha0, d.alpha0.shape + (1,))


def predict(d: DirichletParams) -> np.ndarray:
    """argmax of the categorical mean; the first maximal index wins ties."""
    return np.argmax(d.alpha.data, axis=-1)


def expected_loglik(d: DirichletParams, label) -> Tensor:
    """E_{xi ~ Dir(alpha)}[log xi_label] = psi(alpha_label) - psi(alpha_0)."""
    label = np.asarray(label, dtype=np.int64)
    picked = ops.gather(d.alpha, label)
    return ops.digamma(picked) - ops.digamma(d.alpha0)


def kl_to_uniform(d: DirichletParams) -> Tensor:
    """KL(Dir(alpha) || Dir(1))."""
    alpha, alpha0 = d.alpha, d.alpha0
    c = d.classes
    psi_gap = ops.digamma(alpha) - ops.reshape(ops.digamma(alpha0), alpha0.shape + (1,))
    return (
        ops.lgamma(alpha0)
        - ops.sum(ops.lgamma(alpha), axis=-1)
        - float(special.lgamma(float(c)))
        + ops.sum((alpha - 1.0) * psi_gap, axis=-1)
    )


def dirichlet_entropy(d: DirichletParams) -> np.ndarray:
    alpha = np.asarray(d.alpha.data, dtype=np.float64)
    alpha0 = alpha.sum(axis=-1)
    c = alpha.shape[-1]
    log_beta = special.lgamma(alpha).sum(axis=-1) - special.lgamma(alpha0)
    return log_beta + (alpha0 - c) * special.digamma(alpha0) - ((alpha - 1.0) * special.digamma(alpha)).sum(axis=-1)


def categorical_entropy(probs) -> np.ndarray:
    p = np.asarray(probs.data if isinstance(probs, Tensor) else probs, dtype=np.float64)
    safe = np.where(p > 0, p, 1.0)
    return -(p * np.log(safe)).sum(axis=-1)
