"""
uda-forge command line.

Commands are declared in ``config/commands/*.json`` and dispatched to
``src/<service>/service.py`` by the loader. Results go to stdout, structured
logs to stderr, and every expected failure ends as one
``error[<code>]: <message>`` line on stderr with exit code 1.
"""

import logging
import sys
from pathlib import Path
from typing import List, Optional

import structlog
from dotenv import load_dotenv
from pydantic import ValidationError

from src.errors import UdaForgeError
from src.orchestrator.loader import build_parser, dispatch, load_command_configs
from src.orchestrator.run_config import config_error_from
from src.settings import Settings, get_settings

logger = structlog.get_logger(__name__)

COMMANDS_DIR = "commands"


def configure_logging(level: str = "INFO") -> None:
    """JSON log lines on stderr, filtered at ``level``."""
    numeric = logging.getLevelName(level.upper())
    if not isinstance(numeric, int):
        numeric = logging.INFO
    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.format_exc_info,
            structlog.processors.JSONRenderer(sort_keys=True),
        ],
        wrapper_class=structlog.make_filtering_bound_logger(numeric),
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=False,
    )


def _report(error: BaseException, code: str) -> int:
    print(f"error[{code}]: {error}", file=sys.stderr)
    return 1


def main(argv: Optional[List[str]] = None) -> int:
    """Parse ``argv``, run the command and return the process exit code."""
    load_dotenv()
    try:
        settings: Settings = get_settings()
    except ValidationError as e:
        return _report(config_error_from(e, prefix="UDA_FORGE"), "config")
    configure_logging(settings.log_level)

    try:
        commands = load_command_configs(Path(settings.config_dir) / COMMANDS_DIR)
    except UdaForgeError as e:
        return _report(e, e.code)

    args = build_parser(commands).parse_args(argv)
    if args.log_level:
        configure_logging(args.log_level)

    try:
        result = dispatch(args, commands)
    except UdaForgeError as e:
        return _report(e, e.code)
    except Exception as e:
        logger.error("Command failed unexpectedly", command=args.command, error=str(e), exc_info=True)
        return _report(e, "internal")

    if result:
        print(result)
    return 0
