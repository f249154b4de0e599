import logging
from collections import Counter

import numpy as np

from isap.core.errors import ArtifactError
from isap.db.container import ArtifactStore
from isap.scenegen.scene import RecordLayout, Scene, decode_scene, encode_scene
from isap.schemas.artifacts import ArtifactKind, LayoutField, Manifest, PayloadDtype
from isap.schemas.experiment import ExperimentConfig

logger = logging.getLogger(__name__)


class DatasetCRUD:
    NAME = "dataset"

    @staticmethod
    def layout(config: ExperimentConfig) -> RecordLayout:
        return RecordLayout(past_len=config.generator.past_len, max_neighbors=config.generator.max_neighbors)

    @staticmethod
    def persist(store: ArtifactStore, scenes: list[Scene], config: ExperimentConfig) -> Manifest:
        """Write scenes as little-endian float32 records; an empty list is a valid dataset."""
        layout = DatasetCRUD.layout(config)
        rows = np.stack([encode_scene(s, layout) for s in scenes]) if scenes else np.zeros((0, layout.width))
        counts = Counter(s.split.value if s.split is not None else "untagged" for s in scenes)
        manifest = Manifest(
            kind=ArtifactKind.DATASET,
            dtype=PayloadDtype.FLOAT32,
            layout=[LayoutField(name=n, offset=o, length=l) for n, (o, l) in layout.offsets().items()],
            record_width=layout.width,
            count=len(scenes),
            counts=dict(sorted(counts.items())),
            config=config.echo(),
            config_hash=config.config_hash(),
            metadata={
                "experiment": config.experiment.kind.value,
                "past_len": layout.past_len,
                "max_neighbors": layout.max_neighbors,
            },
        )
        return store.write(DatasetCRUD.NAME, manifest, rows)

    @staticmethod
    def load(store: ArtifactStore) -> tuple[Manifest, list[Scene]]:
        manifest, rows = store.read(DatasetCRUD.NAME)
        if manifest.kind != ArtifactKind.DATASET:
            raise ArtifactError(detail=f"{DatasetCRUD.NAME} holds a {manifest.kind.value} artifact")
        layout = RecordLayout(
            past_len=int(manifest.metadata["past_len"]),
            max_neighbors=int(manifest.metadata["max_neighbors"]),
        )
        if layout.width != manifest.record_width:
            raise ArtifactError(detail=f"record width {manifest.record_width} does not match layout {layout.width}")
        return manifest, [decode_scene(row, layout) for row in rows]
