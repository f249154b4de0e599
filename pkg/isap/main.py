import logging
import sys
from typing import Optional, Sequence

from pydantic import ValidationError

from isap.api.commands import build_parser
from isap.core.config import settings
from isap.core.errors import IsapError, UsageError, ValidationFailure
from isap.dependencies import get_contexts

logger = logging.getLogger(__name__)


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse, dispatch once per configured seed and translate failures into exit codes
    (1 validation, 2 numerical)."""
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        logger.error(f"Invalid invocation: {e.detail}")
        return e.exit_code
    try:
        contexts = get_contexts(args)
        for ctx in contexts:
            code = args.handler(ctx, args)
            if code:
                return code
        summarize = getattr(args, "summarize", None)
        if summarize is not None and len(contexts) > 1:
            return summarize(contexts)
        return 0
    except ValidationError as e:
        logger.error(f"Invalid configuration: {e}", exc_info=settings.DEBUG)
        return ValidationFailure.exit_code
    except IsapError as e:
        logger.error(f"{args.command} failed: {e.detail}", exc_info=settings.DEBUG)
        return e.exit_code


def main():
    logging.basicConfig(level=settings.LOG_LEVEL)
    sys.exit(run())


if __name__ == "__main__":
    main()
