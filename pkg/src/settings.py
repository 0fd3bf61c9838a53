"""
Environment settings for uda-forge.

Values are read from ``UDA_FORGE_*`` environment variables and an optional
``.env`` file in the working directory.
"""

from pathlib import Path
from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

REPO_ROOT = Path(__file__).resolve().parent.parent


class Settings(BaseSettings):
    """Process-wide settings loaded from the environment."""

    model_config = SettingsConfigDict(
        env_prefix="UDA_FORGE_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )

    seed: Optional[int] = Field(
        default=None,
        ge=0,
        lt=2**64,
        description="Overrides the training seed of any loaded run config",
    )
    log_level: str = Field(
        default="INFO",
        description="Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)",
    )
    config_dir: Path = Field(
        default=REPO_ROOT / "config",
        description="Directory holding commands/, presets.json and run_default.json",
    )


def get_settings() -> Settings:
    """Read settings fresh from the current environment."""
    return Settings()
