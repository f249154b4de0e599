import argparse
import logging

from isap.core.config import settings
from isap.core.errors import ArtifactError, DomainError
from isap.crud import ReportCRUD
from isap.dependencies import (
    RunContext,
    require_anchors,
    require_checkpoint,
    require_dataset,
    require_model_kind,
)
from isap.metrics.evaluation import evaluate
from isap.models import build_batch, predict_all
from isap.models.ensemble import EnsembleModel
from isap.scenegen.scene import Split
from isap.schemas.experiment import ModelKind
from isap.schemas.report import EvalReport, Provenance

logger = logging.getLogger(__name__)


def report_names(kind: ModelKind, ensemble_sizes: list[int]) -> list[str]:
    if kind == ModelKind.ENSEMBLE:
        return [f"ensemble_{n}" for n in ensemble_sizes]
    return [kind.value]


def cmd_eval(ctx: RunContext, args: argparse.Namespace) -> int:
    """Evaluate checkpoints on the ID and OOD test splits and write one report per model variant."""
    config = ctx.config
    kinds = require_model_kind(ctx, getattr(args, "model", None))
    for kind in kinds:
        for name in report_names(kind, config.ensemble.eval_sizes):
            if ReportCRUD.exists(ctx.store, name) and not ctx.force:
                raise ArtifactError(detail=f"report {name} already exists; pass --force to overwrite")
    dataset, scenes = require_dataset(ctx)
    anchor_manifest, anchors, _ = require_anchors(ctx, dataset)
    id_scenes = [s for s in scenes if s.split == Split.TEST_ID]
    ood_scenes = [s for s in scenes if s.split == Split.TEST_OOD]
    if not id_scenes or not ood_scenes:
        raise DomainError(detail="evaluation needs non-empty test_id and test_ood splits")
    window = config.generator.speed_window
    id_batch = build_batch(id_scenes, anchors, config.raster, window)
    ood_batch = build_batch(ood_scenes, anchors, config.raster, window)

    for kind in kinds:
        checkpoint, model = require_checkpoint(ctx, kind, dataset, anchor_manifest)
        provenance = Provenance(
            config_hash=config.config_hash(),
            dataset_hash=dataset.payload_sha256,
            anchor_hash=anchor_manifest.payload_sha256,
            checkpoint_hash=checkpoint.payload_sha256,
        )
        for name in report_names(kind, config.ensemble.eval_sizes):
            variant = model.subset(int(name.split("_")[1])) if isinstance(model, EnsembleModel) else model
            pred_id = predict_all(variant, id_batch, settings.EVAL_BATCH_SIZE)
            pred_ood = predict_all(variant, ood_batch, settings.EVAL_BATCH_SIZE)
            rows, histograms, samples = evaluate(pred_id, pred_ood, id_batch, ood_batch, anchors.anchors,
                                                 config.evaluation)
            report = EvalReport(
                name=name,
                experiment=config.experiment.kind.value,
                rows=rows,
                histograms=histograms,
                provenance=provenance,
            )
            ReportCRUD.persist(ctx.store, report, samples)
            print(f"{name}: " + ", ".join(
                f"{r.name}={r.id_value:.4f}" for r in rows if r.name in ("minADE_1", "FDE") and r.id_value is not None
            ))
    return 0


def register(subparsers, parents):
    parser = subparsers.add_parser("eval", parents=parents, help="evaluate checkpoints on the test splits")
    parser.set_defaults(handler=cmd_eval)
