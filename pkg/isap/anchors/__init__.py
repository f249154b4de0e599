from isap.anchors.kmeans import (
    AnchorSet,
    class_counts,
    fit_anchor_set,
    fit_anchors,
    label,
    label_many,
    mean_distances,
)

__all__ = [
    "AnchorSet",
    "class_counts",
    "fit_anchor_set",
    "fit_anchors",
    "label",
    "label_many",
    "mean_distances",
]
