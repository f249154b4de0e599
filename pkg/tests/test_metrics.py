import itertools
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from isap.core.errors import DomainError, ShapeMismatchError
from isap.metrics import (
    ScoredSample,
    alpha0_ratio,
    apr,
    auroc,
    brier,
    confidence_scores,
    ece,
    fde,
    min_ade_k,
    ood_scores,
    scored,
)
from isap.metrics.evaluation import entropy_histograms, evaluate
from isap.metrics.figures import alpha0_vs_speed, entropy_histogram
from isap.models import Batch, Predictions
from isap.schemas.experiment import EvaluationSection
from isap.schemas.report import MetricRow


def _pairwise_auroc(scores, labels) -> float:
    pos = [s for s, l in zip(scores, labels) if l == 1]
    neg = [s for s, l in zip(scores, labels) if l == 0]
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p, n in itertools.product(pos, neg))
    return wins / (len(pos) * len(neg))


def _average_precision(scores, labels) -> float:
    order = np.argsort(-np.asarray(scores))
    hits, precisions = 0, []
    for rank, i in enumerate(order, start=1):
        if labels[i] == 1:
            hits += 1
            precisions.append(hits / rank)
    return float(np.mean(precisions))


def test_auroc_matches_pairwise_definition(rng):
    scores = np.round(rng.normal(0.0, 1.0, 60), 1)
    labels = (rng.random(60) < 0.4).astype(int)
    assert auroc(scored(scores, labels)) == pytest.approx(_pairwise_auroc(scores, labels))


def test_apr_matches_precision_at_each_positive(rng):
    scores = rng.normal(0.0, 1.0, 50)
    labels = (rng.random(50) < 0.3).astype(int)
    assert apr(scored(scores, labels)) == pytest.approx(_average_precision(scores, labels))


def test_ranking_extremes():
    labels = [1, 1, 0, 0]
    assert auroc(scored([4, 3, 2, 1], labels)) == 1.0
    assert auroc(scored([1, 2, 3, 4], labels)) == 0.0
    assert auroc(scored([1, 1, 1, 1], labels)) == 0.5
    assert apr(scored([4, 3, 2, 1], labels)) == 1.0


def test_ranking_needs_both_labels():
    with pytest.raises(DomainError):
        auroc(scored([1.0, 2.0], [1, 1]))


def test_scored_sample_validation():
    with pytest.raises(DomainError):
        ScoredSample(score=float("nan"), label=1)
    with pytest.raises(DomainError):
        ScoredSample(score=1.0, label=2)


def test_ece_bins_are_right_inclusive():
    assert ece([0.95, 0.95, 0.55, 0.55], [1, 0, 1, 1], bins=10) == pytest.approx(0.45)
    assert ece([1.0, 1.0], [1, 1]) == 0.0
    # 0.5 falls in (0.4, 0.5] and 0.0 in the first bin
    assert ece([0.5, 0.0], [1, 0], bins=10) == pytest.approx(0.25)
    with pytest.raises(DomainError):
        ece([], [])


def test_brier_of_uniform_prediction():
    assert brier(np.full((1, 64), 1 / 64), [0])[0] == pytest.approx(0.984375)
    assert brier(np.full((1, 2), 0.5), [1])[0] == pytest.approx(0.5)
    assert brier(np.eye(3), [0, 1, 2]).tolist() == [0.0, 0.0, 0.0]
    with pytest.raises(DomainError):
        brier(np.full((1, 2), 0.5), [2])


def test_min_ade_matches_exhaustive(rng):
    anchors = rng.normal(0.0, 5.0, (6, 12, 2))
    probs = rng.dirichlet(np.ones(6), size=20)
    gt = rng.normal(0.0, 5.0, (20, 12, 2))
    previous = np.full(20, np.inf)
    for k in range(1, 7):
        value = min_ade_k(probs, anchors, gt, k)
        for i in range(20):
            top = np.argsort(-probs[i])[:k]
            expected = min(np.linalg.norm(anchors[c] - gt[i], axis=-1).mean() for c in top)
            assert value[i] == pytest.approx(expected)
        assert (value <= previous + 1e-12).all()
        previous = value
    exhaustive = np.linalg.norm(anchors[None] - gt[:, None], axis=-1).mean(axis=-1).min(axis=1)
    assert np.allclose(min_ade_k(probs, anchors, gt, 6), exhaustive)


def test_min_ade_k_range_and_shapes(rng):
    anchors = rng.normal(0.0, 1.0, (4, 12, 2))
    gt = rng.normal(0.0, 1.0, (12, 2))
    with pytest.raises(DomainError):
        min_ade_k(np.full(4, 0.25), anchors, gt, 5)
    with pytest.raises(ShapeMismatchError):
        min_ade_k(np.full(3, 1 / 3), anchors, gt, 1)
    with pytest.raises(ShapeMismatchError):
        fde(np.full(4, 0.25), anchors, np.zeros((6, 2)))


def test_equal_probabilities_pick_lowest_index():
    anchors = np.stack([np.full((12, 2), 3.0), np.zeros((12, 2))])
    gt = np.zeros((12, 2))
    assert min_ade_k(np.array([0.5, 0.5]), anchors, gt, 1) == pytest.approx(np.hypot(3.0, 3.0))
    assert fde(np.array([0.5, 0.5]), anchors, gt) == pytest.approx(np.hypot(3.0, 3.0))
    assert fde(np.array([0.4, 0.6]), anchors, gt) == 0.0


def test_confidence_scores_for_posterior_networks():
    alpha = np.ones((2, 64))
    alpha[0, 0] = 65.0
    probs = alpha / alpha.sum(axis=-1, keepdims=True)
    conf = confidence_scores(probs, [0, 5], alpha=alpha)
    assert conf.epistemic[0].score == 65.0
    assert conf.aleatoric[0].score == pytest.approx(65 / 128)
    assert [s.label for s in conf.aleatoric] == [1, 0]


def test_confidence_scores_without_epistemic_source():
    conf = confidence_scores(np.array([[0.9, 0.1]]), [0])
    assert conf.epistemic is None
    ensemble = confidence_scores(np.array([[0.9, 0.1]]), [1], ensemble_score=np.array([50.0]))
    assert ensemble.epistemic[0].score == 50.0 and ensemble.epistemic[0].label == 0


def test_ood_scores_rank_evidence():
    id_alpha = np.full((3, 4), 10.0)
    ood_alpha = np.full((2, 4), 1.5)
    scores = ood_scores(id_alpha / 40, ood_alpha / 6, id_alpha, ood_alpha)
    assert auroc(scores.epistemic) == 1.0
    assert [s.label for s in scores.epistemic] == [1, 1, 1, 0, 0]
    assert auroc(scores.aleatoric) == 0.5
    assert ood_scores(id_alpha / 40, ood_alpha / 6).epistemic is None


def test_alpha0_ratio():
    assert alpha0_ratio([100.0, 300.0], [50.0, 50.0]) == pytest.approx(0.25)


def test_metric_row_ranges():
    with pytest.raises(ValueError):
        MetricRow(name="ood_auroc_epistemic", id_value=1.2)
    with pytest.raises(ValueError):
        MetricRow(name="brier", id_value=-0.1)
    with pytest.raises(ValueError):
        MetricRow(name="accuracy", id_value=float("inf"))
    assert MetricRow(name="entropy_dirichlet", id_value=-40.0).id_value == -40.0


def _batch(labels, speed, future) -> Batch:
    n = len(labels)
    return Batch(
        raster=np.zeros((n, 3, 4, 4)),
        state=np.zeros((n, 3)),
        labels=np.asarray(labels),
        future=future,
        agent_target=np.zeros((n, 13)),
        speed=np.asarray(speed, dtype=np.float64),
        seeds=np.arange(n, dtype=np.uint64),
    )


@pytest.fixture
def evidential_pair(rng):
    anchors = rng.normal(0.0, 3.0, (4, 12, 2))
    id_alpha = 1.0 + rng.gamma(5.0, 20.0, (10, 4))
    ood_alpha = 1.0 + rng.gamma(1.0, 0.5, (6, 4))

    def preds(alpha):
        concepts = {name: alpha * scale for name, scale in (("agent", 1.2), ("map", 1.0), ("social", 0.8))}
        return Predictions(probs=alpha / alpha.sum(axis=-1, keepdims=True), alpha=alpha, concept_alpha=concepts)

    id_batch = _batch(rng.integers(0, 4, 10), rng.uniform(0, 8, 10), anchors[rng.integers(0, 4, 10)])
    ood_batch = _batch(rng.integers(0, 4, 6), rng.uniform(10, 20, 6), rng.normal(0.0, 3.0, (6, 12, 2)))
    return preds(id_alpha), preds(ood_alpha), id_batch, ood_batch, anchors


def test_evaluate_rows(evidential_pair):
    pred_id, pred_ood, id_batch, ood_batch, anchors = evidential_pair
    config = EvaluationSection(top_k=[1, 2], histogram_bins=4)
    rows, histograms, samples = evaluate(pred_id, pred_ood, id_batch, ood_batch, anchors, config)
    names = [r.name for r in rows]
    for name in ("minADE_1", "minADE_2", "FDE", "conf_auroc_aleatoric", "conf_apr_epistemic", "ood_auroc_epistemic",
                 "ood_apr_aleatoric", "accuracy", "ece", "brier", "alpha0_mean", "alpha0_ratio", "alpha0_agent",
                 "alpha0_map", "alpha0_social", "entropy_categorical", "entropy_dirichlet"):
        assert name in names
    by_name = {r.name: r for r in rows}
    assert by_name["minADE_2"].id_value <= by_name["minADE_1"].id_value
    assert by_name["ood_auroc_epistemic"].ood_value is None
    assert by_name["alpha0_ratio"].id_value == pytest.approx(pred_ood.alpha0.mean() / pred_id.alpha0.mean())
    assert by_name["alpha0_agent"].id_value == pytest.approx(1.2 * pred_id.alpha0.mean())
    assert len(histograms) == 2 * config.histogram_bins
    assert len(samples) == len(id_batch) + len(ood_batch)
    assert samples[0].split == "test_id" and samples[-1].split == "test_ood"
    assert samples[0].alpha0_map == pytest.approx(pred_id.alpha0[0])


def test_evaluate_classifier_has_no_epistemic_rows(evidential_pair):
    pred_id, pred_ood, id_batch, ood_batch, anchors = evidential_pair
    plain_id, plain_ood = Predictions(probs=pred_id.probs), Predictions(probs=pred_ood.probs)
    rows, histograms, samples = evaluate(plain_id, plain_ood, id_batch, ood_batch, anchors, EvaluationSection(top_k=[1]))
    by_name = {r.name: r for r in rows}
    assert by_name["conf_auroc_epistemic"].id_value is None
    assert by_name["ood_auroc_epistemic"].id_value is None
    assert "alpha0_mean" not in by_name and "entropy_dirichlet" not in by_name
    assert {h.entropy for h in histograms} == {"categorical"}
    assert samples[0].alpha0 is None


def test_entropy_histograms_share_edges(evidential_pair):
    pred_id, pred_ood, *_ = evidential_pair
    rows = entropy_histograms(pred_id, pred_ood, bins=5)
    categorical = [h for h in rows if h.entropy == "categorical"]
    assert sum(h.id_count for h in categorical) == 10
    assert sum(h.ood_count for h in categorical) == 6
    assert all(a.bin_high == b.bin_low for a, b in zip(categorical, categorical[1:]))


def test_figures_are_valid_svg(evidential_pair, tmp_path):
    pred_id, pred_ood, id_batch, ood_batch, anchors = evidential_pair
    _, histograms, samples = evaluate(pred_id, pred_ood, id_batch, ood_batch, anchors, EvaluationSection(top_k=[1]))
    scatter = alpha0_vs_speed(samples, tmp_path / "figures" / "alpha0.svg", "isap")
    bars = entropy_histogram(histograms, "dirichlet", tmp_path / "figures" / "entropy.svg", "isap")
    for path in (scatter, bars):
        assert ET.parse(path).getroot().tag.endswith("svg")
    first = scatter.read_bytes()
    assert alpha0_vs_speed(samples, tmp_path / "again.svg", "isap").read_bytes() == first


def test_min_ade_zero_when_ground_truth_is_a_top_anchor(rng):
    anchors = rng.normal(0.0, 5.0, (5, 12, 2))
    probs = np.array([0.1, 0.4, 0.3, 0.15, 0.05])
    assert min_ade_k(probs, anchors, anchors[2], 2) == 0.0
    assert min_ade_k(probs, anchors, anchors[2], 1) > 0.0


def test_ece_of_calibrated_predictions():
    correct = np.array([1] * 8 + [0] * 2)
    assert ece(np.full(10, 0.8), correct) == pytest.approx(0.0, abs=1e-12)


def test_prior_evidence_gives_chance_ood_ranking():
    alpha = np.ones((4, 64))
    scores = ood_scores(alpha / 64, alpha / 64, alpha, alpha)
    assert auroc(scores.epistemic) == 0.5
    assert np.isclose(alpha0_ratio(alpha.sum(axis=-1), alpha.sum(axis=-1)), 1.0)


def _instances(seed: int, count: int = 100):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n = int(rng.integers(4, 40))
        labels = rng.integers(0, 2, n)
        labels[:2] = [0, 1]
        yield rng, n, rng.permutation(labels)


def _brute_ece(conf, correct, bins) -> float:
    total = 0.0
    for b in range(bins):
        lo, hi = b / bins, (b + 1) / bins
        members = [i for i, c in enumerate(conf) if lo < c <= hi or (b == 0 and c == 0.0)]
        if members:
            gap = np.mean([correct[i] for i in members]) - np.mean([conf[i] for i in members])
            total += len(members) / len(conf) * abs(gap)
    return total


def test_ranking_metrics_match_brute_force_on_random_instances():
    for rng, n, labels in _instances(11):
        tied = np.round(rng.normal(0.0, 1.0, n), 1)
        distinct = rng.normal(0.0, 1.0, n)
        assert abs(auroc(scored(tied, labels)) - _pairwise_auroc(tied, labels)) < 1e-9
        assert abs(apr(scored(distinct, labels)) - _average_precision(distinct, labels)) < 1e-9


def test_auroc_is_invariant_to_monotone_rescoring():
    for rng, n, labels in _instances(12):
        scores = rng.normal(0.0, 2.0, n)
        reference = auroc(scored(scores, labels))
        for transform in (np.exp, np.arctan, lambda s: 3.0 * s + 1.0):
            assert abs(auroc(scored(transform(scores), labels)) - reference) < 1e-9


def test_calibration_metrics_match_brute_force_on_random_instances():
    for rng, n, labels in _instances(13):
        conf = rng.uniform(0.0, 1.0, n)
        bins = int(rng.integers(1, 16))
        assert abs(ece(conf, labels, bins) - _brute_ece(conf, labels, bins)) < 1e-9

        classes = int(rng.integers(2, 10))
        probs = rng.dirichlet(np.ones(classes), size=n)
        targets = rng.integers(0, classes, n)
        expected = [sum((probs[i, c] - (c == targets[i])) ** 2 for c in range(classes)) for i in range(n)]
        assert np.max(np.abs(brier(probs, targets) - expected)) < 1e-9


def test_displacement_metrics_match_brute_force_on_random_instances():
    rng = np.random.default_rng(14)
    for _ in range(100):
        classes = int(rng.integers(2, 9))
        anchors = rng.normal(0.0, 5.0, (classes, 12, 2))
        probs = rng.dirichlet(np.ones(classes))
        gt = rng.normal(0.0, 5.0, (12, 2))
        order = sorted(range(classes), key=lambda c: -probs[c])
        k = int(rng.integers(1, classes + 1))
        ade = min(np.mean([np.hypot(*(anchors[c][t] - gt[t])) for t in range(12)]) for c in order[:k])
        assert abs(float(min_ade_k(probs, anchors, gt, k)) - ade) < 1e-9
        assert abs(float(fde(probs, anchors, gt)) - np.hypot(*(anchors[order[0]][-1] - gt[-1]))) < 1e-9
