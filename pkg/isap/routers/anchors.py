import argparse
import logging

import numpy as np

from isap.anchors import fit_anchor_set
from isap.core.errors import DomainError
from isap.crud import AnchorCRUD
from isap.dependencies import RunContext, require_absent, require_dataset
from isap.scenegen.scene import Split

logger = logging.getLogger(__name__)


def cmd_fit_anchors(ctx: RunContext, args: argparse.Namespace) -> int:
    """Cluster the training futures into the shared anchor set used by every model."""
    require_absent(ctx, AnchorCRUD.NAME)
    dataset, scenes = require_dataset(ctx)
    futures = [s.future for s in scenes if s.split == Split.TRAIN]
    if not futures:
        raise DomainError(detail="the dataset has no training scenes to fit anchors on")
    cfg = ctx.config.anchors
    anchors, counts = fit_anchor_set(
        np.stack(futures),
        cfg.count,
        ctx.config.experiment.seed,
        max_iter=cfg.max_iter,
        tol=cfg.tol,
        max_refits=cfg.max_refits,
    )
    manifest = AnchorCRUD.persist(ctx.store, anchors, counts, ctx.config, dataset)
    print(f"{anchors.count} anchors, smallest class {int(counts.min())}, largest {int(counts.max())}")
    print(f"anchors {manifest.payload_sha256}")
    return 0


def register(subparsers, parents):
    parser = subparsers.add_parser("fit-anchors", parents=parents, help="fit the k-means anchor set")
    parser.set_defaults(handler=cmd_fit_anchors)
