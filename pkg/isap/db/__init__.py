from isap.db.container import ArtifactStore, get_store, sha256_bytes

__all__ = ["ArtifactStore", "get_store", "sha256_bytes"]
