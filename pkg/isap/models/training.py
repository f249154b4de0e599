"""Training loops for every model kind.

Evidential models receive their certainty budget from the training label counts.
The posterior network with decoders trains for `isap_epochs` (falling back to
`epochs`) and keeps its last state unless configured to keep its best validation
ELBO; the other kinds always keep the checkpoint with the lowest validation loss.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from isap.core.errors import DivergenceError, DomainError, NumericalFailure
from isap.core.rng import make_rng
from isap.diffcore import Adam, Module, Tensor, no_grad, ops
from isap.evidential import elbo_loss, total_loss
from isap.models.batching import Batch, iterate_minibatches
from isap.models.ensemble import EnsembleModel
from isap.models.networks import CoverNet, IsapNet, PostCoverNet, build_model, reconstruction_losses
from isap.scenegen import Scene, Split
from isap.schemas.experiment import ExperimentConfig, ModelKind

logger = logging.getLogger(__name__)

SHUFFLE_STREAM = 10


@dataclass
class EpochLog:
    epoch: int
    train_loss: float
    val_loss: float
    val_elbo: Optional[float] = None


@dataclass
class TrainResult:
    kind: ModelKind
    model: Module
    seed: int
    history: list[EpochLog] = field(default_factory=list)
    best_epoch: int = 0


def training_splits(scenes: list[Scene]) -> tuple[list[Scene], list[Scene]]:
    """Train and in-distribution validation scenes; anything else never reaches a training batch."""
    train = [s for s in scenes if s.split == Split.TRAIN]
    val = [s for s in scenes if s.split == Split.VAL_ID]
    if not train or not val:
        raise DomainError(detail="training needs non-empty train and val_id splits")
    return train, val


def cross_entropy(logits: Tensor, labels: np.ndarray) -> Tensor:
    return -ops.gather(ops.log_softmax(logits, axis=-1), labels)


def sample_losses(model: Module, batch: Batch, config: ExperimentConfig) -> tuple[Tensor, Optional[Tensor]]:
    """(per-sample training objective, per-sample ELBO or None)."""
    kl_scale = config.loss.kl_scale
    if isinstance(model, IsapNet):
        out = model(batch.raster, batch.state)
        elbo = elbo_loss(out.alpha, batch.labels, kl_scale)
        rec_agent, rec_map, rec_sc = reconstruction_losses(out, batch.agent_target, batch.map_target, batch.social_target)
        return total_loss(elbo, rec_agent, rec_map, rec_sc, config.loss), elbo
    if isinstance(model, PostCoverNet):
        elbo = elbo_loss(model(batch.raster, batch.state).alpha, batch.labels, kl_scale)
        return elbo, elbo
    if isinstance(model, CoverNet):
        return cross_entropy(model(batch.raster, batch.state), batch.labels), None
    raise DomainError(detail=f"cannot train {type(model).__name__}")


def evaluate_loss(model: Module, batch: Batch, config: ExperimentConfig, batch_size: int = 128) -> tuple[float, Optional[float]]:
    model.eval()
    totals, elbos, count = 0.0, 0.0, 0
    with no_grad():
        for part in iterate_minibatches(batch, batch_size):
            loss, elbo = sample_losses(model, part, config)
            totals += float(loss.data.sum())
            elbos += float(elbo.data.sum()) if elbo is not None else 0.0
            count += len(part)
    mean_elbo = elbos / count if isinstance(model, (IsapNet, PostCoverNet)) else None
    return totals / count, mean_elbo


def _selects_best(kind: ModelKind, config: ExperimentConfig) -> bool:
    return kind != ModelKind.ISAP or config.training.isap_select_best


def train(kind: ModelKind, train_batch: Batch, val_batch: Batch, config: ExperimentConfig, seed: int,
          classes: int, past_len: int) -> TrainResult:
    if len(train_batch) < 2 or len(val_batch) < 1:
        raise DomainError(detail="training needs at least two training and one validation sample")
    cfg = config.training
    model = build_model(kind, classes, config.raster.size, past_len, config.model, seed)
    if isinstance(model, (IsapNet, PostCoverNet)):
        counts = np.bincount(train_batch.labels, minlength=classes)
        model.set_budget(counts, config.model.budget)
    optimizer = Adam(model.parameters(), lr=cfg.lr, weight_decay=cfg.weight_decay)
    select_best = _selects_best(kind, config)
    epochs = cfg.epochs_for(kind)
    result = TrainResult(kind=kind, model=model, seed=seed)
    best_score, best_state = np.inf, None

    for epoch in range(1, epochs + 1):
        model.train()
        rng = make_rng(seed, SHUFFLE_STREAM, epoch)
        running, seen = 0.0, 0
        for step, batch in enumerate(iterate_minibatches(train_batch, cfg.batch_size, rng)):
            try:
                loss, _ = sample_losses(model, batch, config)
                objective = ops.mean(loss)
                if not np.isfinite(objective.data):
                    raise DivergenceError(detail="non-finite loss")
                optimizer.zero_grad()
                objective.backward()
                optimizer.step()
            except NumericalFailure as e:
                raise DivergenceError(detail=f"{kind.value} (seed {seed}) diverged at epoch {epoch}, batch {step}: {e.detail}")
            running += float(objective.data) * len(batch)
            seen += len(batch)

        val_loss, val_elbo = evaluate_loss(model, val_batch, config)
        entry = EpochLog(epoch=epoch, train_loss=running / max(seen, 1), val_loss=val_loss, val_elbo=val_elbo)
        result.history.append(entry)
        logger.info(
            f"{kind.value} seed={seed} epoch {epoch}/{epochs}: "
            f"train={entry.train_loss:.4f} val={entry.val_loss:.4f}"
            + (f" val_elbo={val_elbo:.4f}" if val_elbo is not None else "")
        )
        if select_best:
            score = val_elbo if kind == ModelKind.ISAP else val_loss
            if score < best_score:
                best_score, best_state, result.best_epoch = score, model.state_dict(), epoch

    if select_best and best_state is not None:
        model.load_state_dict(best_state)
    else:
        result.best_epoch = epochs
    model.eval()
    return result


def train_ensemble(train_batch: Batch, val_batch: Batch, config: ExperimentConfig, seed: int, classes: int,
                   past_len: int, workers: int = 1) -> tuple[EnsembleModel, list[TrainResult]]:
    """Members use seeds seed, seed + 1, ...; the result does not depend on `workers`."""
    seeds = [seed + k for k in range(config.ensemble.members)]

    def run(member_seed: int) -> TrainResult:
        return train(ModelKind.COVERNET, train_batch, val_batch, config, member_seed, classes, past_len)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, seeds))
    else:
        results = [run(s) for s in seeds]
    return EnsembleModel([r.model for r in results]), results
