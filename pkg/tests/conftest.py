"""Shared fixtures and logging setup for the test suite."""

import logging
import os
import sys
from pathlib import Path

import numpy as np
import pytest
import structlog

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.toyscenes.service import ToyscenesService  # noqa: E402
from src.toyscenes.spec import SceneSpec  # noqa: E402
from src.trainer.config import TrainConfig  # noqa: E402

def configure_test_logging():
    structlog.configure(
        processors=[
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.dev.ConsoleRenderer(colors=False),
        ],
        wrapper_class=structlog.make_filtering_bound_logger(logging.WARNING),
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=False,
    )


configure_test_logging()

RUN_SLOW = os.getenv("UDA_FORGE_RUN_SLOW") == "1"


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running acceptance experiment (set UDA_FORGE_RUN_SLOW=1)")


def pytest_collection_modifyitems(config, items):
    if RUN_SLOW:
        return
    skip = pytest.mark.skip(reason="set UDA_FORGE_RUN_SLOW=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(autouse=True)
def _isolated_env(monkeypatch):
    for name in ("UDA_FORGE_SEED", "UDA_FORGE_LOG_LEVEL", "UDA_FORGE_CONFIG_DIR"):
        monkeypatch.delenv(name, raising=False)
    yield
    # main() binds logging to the stderr of the test that called it
    configure_test_logging()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def tiny_spec() -> SceneSpec:
    """Smallest scene the discriminator accepts."""
    return SceneSpec(height=32, width=32)


@pytest.fixture
def tiny_data(tmp_path, tiny_spec) -> Path:
    root = tmp_path / "data"
    counts = {"source": 4, "target": 4, "source_val": 3, "target_val": 3}
    ToyscenesService().generate(tiny_spec, root, counts, base_seed=7)
    return root


@pytest.fixture
def tiny_train_config() -> TrainConfig:
    return TrainConfig(
        total_steps=4,
        warmup_steps=2,
        batch_size=2,
        lr_start=1e-3,
        lr_end=1e-5,
        checkpoint_every=2,
        log_wall_time=False,
        seed=3,
    )
