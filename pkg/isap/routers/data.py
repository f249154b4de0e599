import argparse
import logging

from isap.crud import DatasetCRUD
from isap.dependencies import RunContext, require_absent
from isap.scenegen import generate_dataset

logger = logging.getLogger(__name__)


def cmd_gen_data(ctx: RunContext, args: argparse.Namespace) -> int:
    """Generate every split of the configured experiment and store it as one dataset artifact."""
    require_absent(ctx, DatasetCRUD.NAME)
    scenes = generate_dataset(ctx.config)
    manifest = DatasetCRUD.persist(ctx.store, scenes, ctx.config)
    for split, count in manifest.counts.items():
        print(f"{split:>10}: {count}")
    print(f"dataset {manifest.payload_sha256}")
    return 0


def register(subparsers, parents):
    parser = subparsers.add_parser("gen-data", parents=parents, help="generate the synthetic scene dataset")
    parser.set_defaults(handler=cmd_gen_data)
