import numpy as np

from isap.anchors import AnchorSet
from isap.core.errors import ArtifactError
from isap.db.container import ArtifactStore
from isap.schemas.artifacts import ArtifactKind, LayoutField, Manifest, PayloadDtype
from isap.schemas.experiment import ExperimentConfig


class AnchorCRUD:
    NAME = "anchors"

    @staticmethod
    def persist(store: ArtifactStore, anchors: AnchorSet, class_counts: np.ndarray, config: ExperimentConfig,
                dataset: Manifest) -> Manifest:
        horizon = anchors.horizon
        manifest = Manifest(
            kind=ArtifactKind.ANCHORS,
            dtype=PayloadDtype.FLOAT32,
            layout=[LayoutField(name="trajectory", offset=0, length=2 * horizon, shape=[horizon, 2])],
            record_width=2 * horizon,
            count=anchors.count,
            counts={str(c): int(n) for c, n in enumerate(class_counts)},
            config=config.echo(),
            config_hash=config.config_hash(),
            inputs={"dataset": dataset.payload_sha256},
            metadata={"seed": anchors.seed, **anchors.provenance},
        )
        return store.write(AnchorCRUD.NAME, manifest, anchors.anchors.reshape(anchors.count, -1))

    @staticmethod
    def load(store: ArtifactStore) -> tuple[Manifest, AnchorSet, np.ndarray]:
        manifest, rows = store.read(AnchorCRUD.NAME)
        if manifest.kind != ArtifactKind.ANCHORS:
            raise ArtifactError(detail=f"{AnchorCRUD.NAME} holds a {manifest.kind.value} artifact")
        shape = manifest.layout_field("trajectory").shape
        provenance = {k: v for k, v in manifest.metadata.items() if k != "seed"}
        anchors = AnchorSet(anchors=rows.reshape(manifest.count, *shape), seed=int(manifest.metadata["seed"]),
                            provenance=provenance)
        counts = np.array([manifest.counts[str(c)] for c in range(manifest.count)], dtype=np.int64)
        return manifest, anchors, counts
