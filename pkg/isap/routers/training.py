import argparse
import logging
from dataclasses import asdict

from isap.core.config import settings
from isap.crud import CheckpointCRUD
from isap.dependencies import RunContext, require_absent, require_anchors, require_dataset, require_model_kind
from isap.models import build_batch, train, train_ensemble, training_splits
from isap.schemas.experiment import ModelKind

logger = logging.getLogger(__name__)


def cmd_train(ctx: RunContext, args: argparse.Namespace) -> int:
    """Train the requested model kind (or every configured kind) on the train split."""
    config = ctx.config
    kinds = require_model_kind(ctx, getattr(args, "model", None))
    for kind in kinds:
        require_absent(ctx, CheckpointCRUD.name(kind))
    dataset, scenes = require_dataset(ctx)
    anchor_manifest, anchors, _ = require_anchors(ctx, dataset)
    train_scenes, val_scenes = training_splits(scenes)
    window = config.generator.speed_window
    train_batch = build_batch(train_scenes, anchors, config.raster, window)
    val_batch = build_batch(val_scenes, anchors, config.raster, window)
    inputs = {"dataset": dataset.payload_sha256, "anchors": anchor_manifest.payload_sha256}
    seed, classes, past_len = config.experiment.seed, anchors.count, config.generator.past_len

    for kind in kinds:
        logger.info(f"Training {kind.value} on {len(train_batch)} scenes ({len(val_batch)} validation)")
        if kind == ModelKind.ENSEMBLE:
            model, results = train_ensemble(train_batch, val_batch, config, seed, classes, past_len,
                                            workers=settings.TRAIN_WORKERS)
            metadata = {
                "member_seeds": [r.seed for r in results],
                "best_epochs": [r.best_epoch for r in results],
            }
        else:
            result = train(kind, train_batch, val_batch, config, seed, classes, past_len)
            model = result.model
            metadata = {"best_epoch": result.best_epoch, "history": [asdict(e) for e in result.history]}
        manifest = CheckpointCRUD.persist(ctx.store, kind, model, config, seed, classes, past_len, inputs, metadata)
        print(f"{kind.value}: {model.num_parameters()} parameters, checkpoint {manifest.payload_sha256}")
    return 0


def register(subparsers, parents):
    parser = subparsers.add_parser("train", parents=parents, help="train model checkpoints")
    parser.set_defaults(handler=cmd_train)
