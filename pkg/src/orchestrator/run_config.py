"""
Run configuration: a scene section and a training section in one JSON file.

Presets, recipes and flag overrides are merged into the raw document before
it is validated once, so the warm-up default follows an overridden step count
and every error names the offending field.
"""

import json
import shutil
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Optional, Union

import structlog
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from src.errors import ConfigError, OutputExistsError
from src.settings import Settings
from src.toyscenes.spec import SceneSpec
from src.trainer.config import TrainConfig

logger = structlog.get_logger(__name__)

DEFAULT_RUN_CONFIG = "run_default.json"
PRESETS_FILE = "presets.json"

PathLike = Union[str, Path]


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    scene: SceneSpec = Field(default_factory=SceneSpec)
    train: TrainConfig = Field(default_factory=TrainConfig)


def config_error_from(error: ValidationError, prefix: str = "") -> ConfigError:
    """One ConfigError naming every failing field by its dotted path."""
    lines = []
    for item in error.errors():
        loc = ".".join(str(part) for part in item["loc"])
        if prefix:
            loc = f"{prefix}.{loc}" if loc else prefix
        message = item["msg"].removeprefix("Value error, ")
        lines.append(f"{loc}: {message}" if loc else message)
    return ConfigError("; ".join(lines))


def _read_json(path: Path) -> Dict[str, Any]:
    if not path.is_file():
        raise ConfigError(f"{path}: configuration file not found")
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e})") from e
    if not isinstance(document, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    return document


class PresetCatalog(BaseModel):
    """Named ablation switch sets and loss-weight recipes."""

    model_config = ConfigDict(extra="forbid")

    presets: Dict[str, Dict[str, bool]]
    recipes: Dict[str, Dict[str, float]]

    @classmethod
    def load(cls, config_dir: PathLike) -> "PresetCatalog":
        path = Path(config_dir) / PRESETS_FILE
        try:
            return cls.model_validate(_read_json(path))
        except ValidationError as e:
            raise config_error_from(e, prefix=PRESETS_FILE) from e

    def preset(self, name: str) -> Dict[str, bool]:
        if name not in self.presets:
            raise ConfigError(f"unknown preset {name!r}; choose one of {', '.join(sorted(self.presets))}")
        return self.presets[name]

    def recipe(self, name: str) -> Dict[str, float]:
        if name not in self.recipes:
            raise ConfigError(f"unknown recipe {name!r}; choose one of {', '.join(sorted(self.recipes))}")
        return self.recipes[name]


def resolve_seed(flag: Optional[int], settings: Settings, config_seed: int) -> int:
    """``--seed`` over ``UDA_FORGE_SEED`` over the config file."""
    if flag is not None:
        if not 0 <= int(flag) < 2**64:
            raise ConfigError(f"seed: must be an unsigned 64-bit integer, got {flag}")
        return int(flag)
    if settings.seed is not None:
        return settings.seed
    return config_seed


def load_run_config(
    path: Optional[PathLike],
    settings: Settings,
    preset: Optional[str] = None,
    recipe: Optional[str] = None,
    seed: Optional[int] = None,
    train_overrides: Optional[Mapping[str, Any]] = None,
) -> RunConfig:
    """
    Read and validate a RunConfig.

    Args:
        path: JSON file; None reads ``run_default.json`` from the config directory.
        settings: Environment settings (config directory, seed override).
        preset: Ablation preset replacing ``train.ablation``.
        recipe: Loss-weight recipe replacing ``train.loss_weights``.
        seed: ``--seed`` flag value.
        train_overrides: Other flag values for the ``train`` section; None
            entries are ignored.

    Raises:
        ConfigError: On unreadable JSON, unknown keys or violated constraints.
    """
    source = Path(path) if path else Path(settings.config_dir) / DEFAULT_RUN_CONFIG
    raw = _read_json(source)

    train_raw = dict(raw.get("train") or {})
    if preset or recipe:
        catalog = PresetCatalog.load(settings.config_dir)
        if preset:
            train_raw["ablation"] = dict(catalog.preset(preset))
        if recipe:
            train_raw["loss_weights"] = dict(catalog.recipe(recipe))
    for key, value in (train_overrides or {}).items():
        if value is not None:
            train_raw[key] = value
    if seed is not None or settings.seed is not None:
        train_raw["seed"] = resolve_seed(seed, settings, 0)
    raw = {**raw, "train": train_raw}

    try:
        config = RunConfig.model_validate(raw)
    except ValidationError as e:
        raise config_error_from(e) from e
    logger.info("Run config loaded", path=str(source), preset=preset, recipe=recipe, seed=config.train.seed)
    return config


def prepare_output_dir(path: PathLike, force: bool, patterns: Iterable[str]) -> Path:
    """
    Make sure ``path`` can receive a command's outputs.

    An existing non-empty directory is refused unless ``force`` is set, in
    which case only entries matching ``patterns`` are removed.
    """
    path = Path(path)
    if path.exists() and not path.is_dir():
        raise OutputExistsError(f"{path} exists and is not a directory")
    if path.is_dir() and any(path.iterdir()):
        if not force:
            raise OutputExistsError(f"{path} is not empty; pass --force to overwrite")
        for pattern in patterns:
            for entry in path.glob(pattern):
                if entry.is_dir():
                    shutil.rmtree(entry)
                else:
                    entry.unlink()
    path.mkdir(parents=True, exist_ok=True)
    return path


RUN_CONFIG_FILE = "run_config.json"


def save_run_config(config: RunConfig, out_dir: PathLike) -> Path:
    """Write the resolved RunConfig next to a run's outputs."""
    path = Path(out_dir) / RUN_CONFIG_FILE
    path.write_text(config.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return path
