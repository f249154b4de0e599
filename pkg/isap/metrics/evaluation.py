"""Assemble per-model metric rows for an (ID test, OOD test) pair."""
import logging
from typing import Optional

import numpy as np

from isap.models.batching import Batch
from isap.models.inference import Predictions
from isap.metrics.trajectory import fde, min_ade_k
from isap.metrics.uncertainty import alpha0_ratio, apr, auroc, brier, confidence_scores, ece, ood_scores
from isap.schemas.experiment import EvaluationSection
from isap.schemas.report import HistogramRow, MetricRow, SampleRow

logger = logging.getLogger(__name__)


def _ranking(samples) -> tuple[Optional[float], Optional[float]]:
    """(AUROC, APR), or absent when only one outcome occurs."""
    if samples is None or len({s.label for s in samples}) < 2:
        return None, None
    return auroc(samples), apr(samples)


def trajectory_rows(pred_id: Predictions, pred_ood: Predictions, id_batch: Batch, ood_batch: Batch,
                    anchors: np.ndarray, top_k: list[int]) -> list[MetricRow]:
    rows = []
    for k in top_k:
        rows.append(MetricRow(
            name=f"minADE_{k}",
            id_value=float(min_ade_k(pred_id.probs, anchors, id_batch.future, k).mean()),
            ood_value=float(min_ade_k(pred_ood.probs, anchors, ood_batch.future, k).mean()),
        ))
    rows.append(MetricRow(
        name="FDE",
        id_value=float(fde(pred_id.probs, anchors, id_batch.future).mean()),
        ood_value=float(fde(pred_ood.probs, anchors, ood_batch.future).mean()),
    ))
    return rows


def uncertainty_rows(pred_id: Predictions, pred_ood: Predictions, id_batch: Batch, ood_batch: Batch,
                     bins: int) -> list[MetricRow]:
    conf_id = confidence_scores(pred_id.probs, id_batch.labels, pred_id.alpha, pred_id.ensemble_score)
    conf_ood = confidence_scores(pred_ood.probs, ood_batch.labels, pred_ood.alpha, pred_ood.ensemble_score)
    rows = []
    for kind in ("aleatoric", "epistemic"):
        id_auroc, id_apr = _ranking(getattr(conf_id, kind))
        ood_auroc, ood_apr = _ranking(getattr(conf_ood, kind))
        rows.append(MetricRow(name=f"conf_auroc_{kind}", id_value=id_auroc, ood_value=ood_auroc))
        rows.append(MetricRow(name=f"conf_apr_{kind}", id_value=id_apr, ood_value=ood_apr))

    ood = ood_scores(
        pred_id.probs, pred_ood.probs, pred_id.alpha, pred_ood.alpha, pred_id.ensemble_score, pred_ood.ensemble_score
    )
    for kind in ("aleatoric", "epistemic"):
        value_auroc, value_apr = _ranking(getattr(ood, kind))
        rows.append(MetricRow(name=f"ood_auroc_{kind}", id_value=value_auroc))
        rows.append(MetricRow(name=f"ood_apr_{kind}", id_value=value_apr))

    id_correct = pred_id.predicted == id_batch.labels
    ood_correct = pred_ood.predicted == ood_batch.labels
    rows.append(MetricRow(name="accuracy", id_value=float(id_correct.mean()), ood_value=float(ood_correct.mean())))
    rows.append(MetricRow(
        name="ece",
        id_value=ece(pred_id.probs.max(axis=-1), id_correct, bins),
        ood_value=ece(pred_ood.probs.max(axis=-1), ood_correct, bins),
    ))
    rows.append(MetricRow(
        name="brier",
        id_value=float(brier(pred_id.probs, id_batch.labels).mean()),
        ood_value=float(brier(pred_ood.probs, ood_batch.labels).mean()),
    ))
    return rows


def evidence_rows(pred_id: Predictions, pred_ood: Predictions) -> list[MetricRow]:
    if not pred_id.evidential:
        return []
    rows = [
        MetricRow(name="alpha0_mean", id_value=float(pred_id.alpha0.mean()), ood_value=float(pred_ood.alpha0.mean())),
        MetricRow(name="alpha0_ratio", id_value=alpha0_ratio(pred_id.alpha0, pred_ood.alpha0)),
    ]
    for concept in pred_id.concept_alpha:
        rows.append(MetricRow(
            name=f"alpha0_{concept}",
            id_value=float(pred_id.concept_alpha[concept].sum(axis=-1).mean()),
            ood_value=float(pred_ood.concept_alpha[concept].sum(axis=-1).mean()),
        ))
    return rows


def entropies(pred: Predictions) -> dict[str, np.ndarray]:
    out = {"categorical": pred.categorical_entropy()}
    if pred.evidential:
        out["dirichlet"] = pred.dirichlet_entropy()
    return out


def entropy_rows(pred_id: Predictions, pred_ood: Predictions) -> list[MetricRow]:
    id_h, ood_h = entropies(pred_id), entropies(pred_ood)
    return [
        MetricRow(name=f"entropy_{kind}", id_value=float(id_h[kind].mean()), ood_value=float(ood_h[kind].mean()))
        for kind in id_h
    ]


def entropy_histograms(pred_id: Predictions, pred_ood: Predictions, bins: int) -> list[HistogramRow]:
    """Shared-edge histograms of ID and OOD entropies."""
    id_h, ood_h = entropies(pred_id), entropies(pred_ood)
    rows = []
    for kind in id_h:
        pooled = np.concatenate([id_h[kind], ood_h[kind]])
        low, high = float(pooled.min()), float(pooled.max())
        if high <= low:
            high = low + 1.0
        edges = np.linspace(low, high, bins + 1)
        id_counts, _ = np.histogram(id_h[kind], bins=edges)
        ood_counts, _ = np.histogram(ood_h[kind], bins=edges)
        for b in range(bins):
            rows.append(HistogramRow(
                entropy=kind,
                bin_low=float(edges[b]),
                bin_high=float(edges[b + 1]),
                id_count=int(id_counts[b]),
                ood_count=int(ood_counts[b]),
            ))
    return rows


def sample_rows(pred: Predictions, batch: Batch, split: str) -> list[SampleRow]:
    h = entropies(pred)
    alpha0 = pred.alpha0
    concept0 = {name: a.sum(axis=-1) for name, a in pred.concept_alpha.items()}
    rows = []
    for i in range(len(batch)):
        rows.append(SampleRow(
            split=split,
            seed=int(batch.seeds[i]),
            speed=float(batch.speed[i]),
            true_anchor=int(batch.labels[i]),
            predicted_anchor=int(pred.predicted[i]),
            max_prob=float(pred.probs[i].max()),
            alpha0=None if alpha0 is None else float(alpha0[i]),
            alpha0_agent=float(concept0["agent"][i]) if "agent" in concept0 else None,
            alpha0_map=float(concept0["map"][i]) if "map" in concept0 else None,
            alpha0_social=float(concept0["social"][i]) if "social" in concept0 else None,
            ensemble_score=None if pred.ensemble_score is None else float(pred.ensemble_score[i]),
            entropy_categorical=float(h["categorical"][i]),
            entropy_dirichlet=float(h["dirichlet"][i]) if "dirichlet" in h else None,
        ))
    return rows


def evaluate(pred_id: Predictions, pred_ood: Predictions, id_batch: Batch, ood_batch: Batch, anchors: np.ndarray,
             config: EvaluationSection) -> tuple[list[MetricRow], list[HistogramRow], list[SampleRow]]:
    rows = (
        trajectory_rows(pred_id, pred_ood, id_batch, ood_batch, anchors, config.top_k)
        + uncertainty_rows(pred_id, pred_ood, id_batch, ood_batch, config.ece_bins)
        + evidence_rows(pred_id, pred_ood)
        + entropy_rows(pred_id, pred_ood)
    )
    histograms = entropy_histograms(pred_id, pred_ood, config.histogram_bins)
    samples = sample_rows(pred_id, id_batch, "test_id") + sample_rows(pred_ood, ood_batch, "test_ood")
    return rows, histograms, samples
