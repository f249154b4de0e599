from isap.dependencies.artifacts import (
    RunContext,
    get_contexts,
    require_absent,
    require_anchors,
    require_checkpoint,
    require_dataset,
    require_model_kind,
)

__all__ = [
    "RunContext",
    "get_contexts",
    "require_absent",
    "require_anchors",
    "require_checkpoint",
    "require_dataset",
    "require_model_kind",
]
