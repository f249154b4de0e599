import logging
from typing import Any, Optional

import numpy as np

from isap.core.errors import ArtifactError
from isap.db.container import ArtifactStore
from isap.diffcore import Module
from isap.models.ensemble import EnsembleModel
from isap.models.networks import build_model
from isap.schemas.artifacts import ArtifactKind, LayoutField, Manifest, PayloadDtype
from isap.schemas.experiment import ExperimentConfig, ModelKind

logger = logging.getLogger(__name__)


def _flatten(state: dict[str, np.ndarray]) -> tuple[list[LayoutField], np.ndarray]:
    layout, chunks, offset = [], [], 0
    for name in sorted(state):
        value = np.asarray(state[name], dtype=np.float64)
        layout.append(LayoutField(name=name, offset=offset, length=int(value.size), shape=list(value.shape)))
        chunks.append(value.ravel())
        offset += value.size
    return layout, np.concatenate(chunks) if chunks else np.zeros(0)


def _unflatten(manifest: Manifest, row: np.ndarray) -> dict[str, np.ndarray]:
    return {
        entry.name: row[entry.offset:entry.offset + entry.length].reshape(entry.shape)
        for entry in manifest.layout
    }


class CheckpointCRUD:
    @staticmethod
    def name(kind: ModelKind) -> str:
        return f"checkpoints/{kind.value}"

    @staticmethod
    def persist(store: ArtifactStore, kind: ModelKind, model: Module, config: ExperimentConfig, seed: int,
                classes: int, past_len: int, inputs: dict[str, str],
                metadata: Optional[dict[str, Any]] = None) -> Manifest:
        """Store the full state (parameters and buffers) as one little-endian float64 record."""
        layout, row = _flatten(model.state_dict())
        extra = {"model": kind.value, "seed": seed, "classes": classes, "past_len": past_len}
        if isinstance(model, EnsembleModel):
            extra["members"] = len(model.members)
        manifest = Manifest(
            kind=ArtifactKind.CHECKPOINT,
            dtype=PayloadDtype.FLOAT64,
            layout=layout,
            record_width=int(row.size),
            count=1,
            config=config.echo(),
            config_hash=config.config_hash(),
            inputs=inputs,
            metadata={**extra, **(metadata or {})},
        )
        return store.write(CheckpointCRUD.name(kind), manifest, row[None, :])

    @staticmethod
    def load(store: ArtifactStore, kind: ModelKind, config: ExperimentConfig) -> tuple[Manifest, Module]:
        manifest, rows = store.read(CheckpointCRUD.name(kind))
        if manifest.kind != ArtifactKind.CHECKPOINT or manifest.metadata.get("model") != kind.value:
            raise ArtifactError(detail=f"{CheckpointCRUD.name(kind)} is not a {kind.value} checkpoint")
        meta = manifest.metadata
        seed, classes, past_len = int(meta["seed"]), int(meta["classes"]), int(meta["past_len"])

        def make(member_kind: ModelKind, member_seed: int) -> Module:
            return build_model(member_kind, classes, config.raster.size, past_len, config.model, member_seed)

        if kind == ModelKind.ENSEMBLE:
            model = EnsembleModel([make(ModelKind.COVERNET, seed + k) for k in range(int(meta["members"]))])
        else:
            model = make(kind, seed)
        model.load_state_dict(_unflatten(manifest, rows[0]))
        model.eval()
        return manifest, model
