import argparse
import sys

from isap.core.config import settings
from isap.core.errors import UsageError
from isap.routers import anchors, data, evaluation, report, training
from isap.schemas.experiment import ExperimentKind, ModelKind

ROUTERS = (data, anchors, training, evaluation, report)


class CommandParser(argparse.ArgumentParser):
    """Reports bad invocations as validation failures instead of exiting with argparse's code 2."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise UsageError(detail=message)


def common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment TOML file")
    common.add_argument("--seed", type=int, help="master seed (replaces any configured seed list)")
    common.add_argument("--out", help="output directory for artifacts")
    common.add_argument("--model", choices=[k.value for k in ModelKind], help="restrict to one model kind")
    common.add_argument("--experiment", choices=[k.value for k in ExperimentKind], help="split rule")
    common.add_argument("--scale", type=float, help="dataset scale factor")
    common.add_argument("--force", action="store_true", help="overwrite existing artifacts")
    return common


def build_parser() -> CommandParser:
    parser = CommandParser(prog="isap", description=f"{settings.PROJECT_NAME} {settings.VERSION}")
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=CommandParser)
    parents = [common_options()]
    for router in ROUTERS:
        router.register(subparsers, parents)
    return parser
