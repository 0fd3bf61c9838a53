"""
Command loading: argparse subcommands built from ``config/commands/*.json``.

NAMING CONVENTION
=================

config/commands/<NAME>.json   -> one subcommand
src/<SERVICE>/service.py      -> <Service>Service, or a get_<SERVICE>_service() factory

Each command file names the service and the method that handles it. The
method receives a ``command_call`` dict keyed by argument dest and returns
the text printed on stdout.
"""

import argparse
import json
from importlib import import_module
from pathlib import Path
from typing import Any, Callable, Dict, List, Literal, Optional, Union

import structlog
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from src.errors import ConfigError
from src.orchestrator.run_config import config_error_from

logger = structlog.get_logger(__name__)

PROG = "uda-forge"

_TYPES: Dict[str, Callable[[str], Any]] = {"str": str, "path": str, "int": int, "float": float}


class ArgumentSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    flag: str
    type: Literal["str", "path", "int", "float", "bool"] = "str"
    required: bool = False
    default: Optional[Union[bool, int, float, str]] = None
    choices: Optional[List[Union[int, float, str]]] = None
    help: str = ""


class CommandSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    service: str
    method: str
    description: str = ""
    arguments: Dict[str, ArgumentSpec] = Field(default_factory=dict)


class CommandFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    type: Literal["command"]
    command: CommandSpec


def load_command_configs(config_dir: Union[str, Path]) -> Dict[str, CommandSpec]:
    """Load every command file of a directory, keyed by command name, in file-name order."""
    config_path = Path(config_dir)
    if not config_path.is_dir():
        raise ConfigError(f"{config_path}: command configuration directory not found")

    commands: Dict[str, CommandSpec] = {}
    for file_path in sorted(config_path.glob("*.json")):
        try:
            document = json.loads(file_path.read_text(encoding="utf-8"))
            spec = CommandFile.model_validate(document).command
        except json.JSONDecodeError as e:
            raise ConfigError(f"{file_path}: invalid JSON ({e})") from e
        except ValidationError as e:
            raise config_error_from(e, prefix=file_path.name) from e
        if spec.name in commands:
            raise ConfigError(f"{file_path}: command {spec.name!r} is defined twice")
        commands[spec.name] = spec
    logger.debug("Loaded command configs", commands=list(commands))
    return commands


def service_name_to_class_name(service_name: str) -> str:
    """Convert snake_case to PascalCaseService."""
    parts = service_name.split("_")
    return "".join(p.capitalize() for p in parts) + "Service"


_services: Dict[str, Any] = {}


def get_or_create_service(service_name: str) -> Any:
    """Service instance for ``src/<service_name>/service.py``, factory first, class second."""
    if service_name in _services:
        return _services[service_name]

    module_path = f"src.{service_name}.service"
    module = import_module(module_path)
    factory = getattr(module, f"get_{service_name}_service", None)
    if factory is not None:
        instance = factory()
        logger.debug("Created service via factory", module_path=module_path)
    else:
        class_name = service_name_to_class_name(service_name)
        service_class = getattr(module, class_name, None)
        if service_class is None:
            raise ConfigError(f"{module_path} defines neither get_{service_name}_service nor {class_name}")
        instance = service_class()
        logger.debug("Created service via class instantiation", class_name=class_name)
    _services[service_name] = instance
    return instance


def _add_argument(parser: argparse.ArgumentParser, dest: str, spec: ArgumentSpec) -> None:
    if spec.type == "bool":
        parser.add_argument(spec.flag, dest=dest, action="store_true", help=spec.help)
        return
    kwargs: Dict[str, Any] = {"dest": dest, "type": _TYPES[spec.type], "help": spec.help}
    if spec.required:
        kwargs["required"] = True
    else:
        kwargs["default"] = spec.default
    if spec.choices is not None:
        kwargs["choices"] = spec.choices
    if spec.type == "path":
        kwargs["metavar"] = "PATH"
    parser.add_argument(spec.flag, **kwargs)


def build_parser(commands: Dict[str, CommandSpec]) -> argparse.ArgumentParser:
    """Top-level parser with one subparser per command."""
    parser = argparse.ArgumentParser(
        prog=PROG,
        description="Unsupervised domain adaptation for toy semantic segmentation.",
    )
    parser.add_argument(
        "--log-level",
        dest="log_level",
        default=None,
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        help="Logging level (default: UDA_FORGE_LOG_LEVEL or INFO)",
    )
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    for name, spec in commands.items():
        sub = subparsers.add_parser(
            name,
            help=spec.description,
            description=spec.description,
            formatter_class=argparse.ArgumentDefaultsHelpFormatter,
        )
        for dest, arg in spec.arguments.items():
            _add_argument(sub, dest, arg)
    return parser


def dispatch(args: argparse.Namespace, commands: Dict[str, CommandSpec]) -> str:
    """Call the service method configured for ``args.command``."""
    spec = commands[args.command]
    service = get_or_create_service(spec.service)
    command_call = {dest: getattr(args, dest) for dest in spec.arguments}
    logger.debug("Dispatching command", command=spec.name, service=spec.service, method=spec.method)
    return getattr(service, spec.method)(command_call)
