"""Manifest + payload container: `<name>.json` next to `<name>.bin`."""
import hashlib
import json
import logging
import os
from pathlib import Path
from typing import Union

import numpy as np
from pydantic import ValidationError

from isap.core.config import settings
from isap.core.errors import ArtifactError
from isap.schemas.artifacts import Manifest

logger = logging.getLogger(__name__)


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _write_atomic(path: Path, data: bytes):
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as f:
        f.write(data)
    os.replace(tmp, path)


class ArtifactStore:
    def __init__(self, root: Union[str, Path]):
        self.root = Path(root)

    def paths(self, name: str) -> tuple[Path, Path]:
        return self.root / f"{name}.json", self.root / f"{name}.bin"

    def exists(self, name: str) -> bool:
        manifest_path, payload_path = self.paths(name)
        return manifest_path.exists() or payload_path.exists()

    def write(self, name: str, manifest: Manifest, payload: np.ndarray) -> Manifest:
        """Serialize `payload` (count x record_width) with the manifest's dtype and record its hash."""
        payload = np.asarray(payload, dtype=np.float64).reshape(manifest.count, manifest.record_width)
        data = payload.astype(manifest.dtype.value).tobytes()
        manifest = manifest.model_copy(update={"payload_sha256": sha256_bytes(data), "payload_bytes": len(data)})
        manifest_path, payload_path = self.paths(name)
        manifest_path.parent.mkdir(parents=True, exist_ok=True)
        _write_atomic(payload_path, data)
        _write_atomic(manifest_path, manifest.model_dump_json(indent=2).encode())
        logger.info(f"Wrote {manifest.kind.value} artifact {manifest_path} ({manifest.count} records)")
        return manifest

    def read_manifest(self, name: str) -> Manifest:
        manifest_path, _ = self.paths(name)
        if not manifest_path.exists():
            raise ArtifactError(detail=f"missing artifact manifest {manifest_path}")
        try:
            return Manifest.model_validate(json.loads(manifest_path.read_text()))
        except (json.JSONDecodeError, ValidationError) as e:
            raise ArtifactError(detail=f"corrupt manifest {manifest_path}: {e}")

    def read(self, name: str) -> tuple[Manifest, np.ndarray]:
        """Manifest plus the payload as float64 rows, after size and hash verification."""
        manifest = self.read_manifest(name)
        _, payload_path = self.paths(name)
        if not payload_path.exists():
            raise ArtifactError(detail=f"missing artifact payload {payload_path}")
        data = payload_path.read_bytes()
        if len(data) != manifest.expected_bytes or len(data) != manifest.payload_bytes:
            raise ArtifactError(
                detail=f"{payload_path} holds {len(data)} bytes, manifest declares {manifest.expected_bytes}"
            )
        if sha256_bytes(data) != manifest.payload_sha256:
            raise ArtifactError(detail=f"{payload_path} does not match its manifest hash")
        rows = np.frombuffer(data, dtype=manifest.dtype.value).astype(np.float64)
        return manifest, rows.reshape(manifest.count, manifest.record_width)


def get_store(root: Union[str, Path, None] = None) -> ArtifactStore:
    return ArtifactStore(root if root is not None else settings.OUTPUT_DIR)
