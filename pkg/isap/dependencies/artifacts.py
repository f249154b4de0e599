"""Preconditions shared by the subcommands: resolved config, artifact store and upstream artifacts."""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from isap.anchors import AnchorSet
from isap.core.config import settings
from isap.core.errors import ArtifactError, ConfigError
from isap.crud import AnchorCRUD, CheckpointCRUD, DatasetCRUD
from isap.db.container import ArtifactStore, get_store
from isap.diffcore import Module
from isap.scenegen.scene import Scene
from isap.schemas.artifacts import Manifest
from isap.schemas.experiment import ExperimentConfig, ModelKind, load_config

logger = logging.getLogger(__name__)


@dataclass
class RunContext:
    config: ExperimentConfig
    store: ArtifactStore
    force: bool = False


def get_contexts(args) -> list[RunContext]:
    """Config file, then --seed/--scale/--out/--experiment overrides; one context per configured
    seed, each with the store in its own output directory."""
    seed = getattr(args, "seed", None)
    overrides = {
        "seed": seed,
        "seeds": [seed] if seed is not None else None,
        "scale": getattr(args, "scale", None),
        "output_dir": getattr(args, "out", None),
        "kind": getattr(args, "experiment", None),
    }
    config_path = Path(args.config) if getattr(args, "config", None) else None
    if config_path is not None and not config_path.exists():
        raise ConfigError(detail=f"config file {config_path} does not exist")
    defaults = {"experiment": {"seed": settings.DEFAULT_SEED, "output_dir": settings.OUTPUT_DIR}}
    config = load_config(config_path, overrides, defaults)
    force = bool(getattr(args, "force", False))
    return [RunContext(config=c, store=get_store(c.experiment.output_dir), force=force) for c in config.sweep()]


def require_absent(ctx: RunContext, name: str):
    if ctx.store.exists(name) and not ctx.force:
        raise ArtifactError(detail=f"{ctx.store.root / name} already exists; pass --force to overwrite")


def _require_config(ctx: RunContext, manifest: Manifest, label: str):
    if manifest.config_hash != ctx.config.config_hash():
        raise ArtifactError(
            detail=f"{label} was built with config {manifest.config_hash[:12]}, "
                   f"current config is {ctx.config.config_hash()[:12]}"
        )


def require_dataset(ctx: RunContext) -> tuple[Manifest, list[Scene]]:
    manifest, scenes = DatasetCRUD.load(ctx.store)
    _require_config(ctx, manifest, "dataset")
    return manifest, scenes


def require_anchors(ctx: RunContext, dataset: Manifest) -> tuple[Manifest, AnchorSet, np.ndarray]:
    manifest, anchors, counts = AnchorCRUD.load(ctx.store)
    _require_config(ctx, manifest, "anchor set")
    if manifest.inputs.get("dataset") != dataset.payload_sha256:
        raise ArtifactError(detail="anchor set was fitted on a different dataset")
    return manifest, anchors, counts


def require_model_kind(ctx: RunContext, kind: Optional[str]) -> list[ModelKind]:
    if kind is None:
        return list(ctx.config.experiment.models)
    model_kind = ModelKind(kind)
    if model_kind not in ctx.config.experiment.models:
        raise ConfigError(detail=f"model kind {model_kind.value} is not configured for this experiment")
    return [model_kind]


def require_checkpoint(ctx: RunContext, kind: ModelKind, dataset: Manifest,
                       anchors: Manifest) -> tuple[Manifest, Module]:
    manifest, model = CheckpointCRUD.load(ctx.store, kind, ctx.config)
    _require_config(ctx, manifest, f"{kind.value} checkpoint")
    if manifest.inputs.get("dataset") != dataset.payload_sha256 or manifest.inputs.get("anchors") != anchors.payload_sha256:
        raise ArtifactError(detail=f"{kind.value} checkpoint was trained on different upstream artifacts")
    return manifest, model
