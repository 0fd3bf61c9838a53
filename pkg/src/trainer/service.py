"""
Trainer Service

Resolves the run configuration (file, preset, recipe, flags and environment)
and runs one training into an output directory.
"""

import sys
from pathlib import Path
from typing import Any, Dict, Optional

import structlog

from src.errors import ConfigError, UdaForgeError, UnknownParameterError
from src.losses.weights import WEIGHT_NAMES
from src.orchestrator.run_config import RUN_CONFIG_FILE, RunConfig, load_run_config, prepare_output_dir, save_run_config
from src.settings import get_settings
from src.trainer.log import CSV_FILE, JSONL_FILE, StepRecord
from src.trainer.loop import FINAL_CHECKPOINT, TrainResult, train
from src.trainer.sweep import DEFAULT_FACTORS, SWEEP_FILE, parse_factors, run_sweep

logger = structlog.get_logger(__name__)

RUN_OUTPUTS = [CSV_FILE, JSONL_FILE, RUN_CONFIG_FILE, "checkpoint_*.udac"]
SUMMARY_EVERY = 100


def format_summary(record: StepRecord, total_steps: int) -> str:
    return (
        f"step {record.step + 1:>6}/{total_steps} lr {record.lr:.3e} "
        f"l_g1 {record.l_g1:.4f} l_g2_s {record.l_g2_s:.4f} l_g2_t {record.l_g2_t:.4f} "
        f"l_g3 {record.l_g3:.4f} l_d {record.l_d:.4f} mask {record.mask_fraction:.3f}"
    )


def print_progress(total_steps: int, every: int = SUMMARY_EVERY):
    def progress(record: StepRecord) -> None:
        if (record.step + 1) % every == 0 or record.step + 1 == total_steps:
            print(format_summary(record, total_steps), file=sys.stdout, flush=True)

    return progress


def resolve_train_config(command_call: Dict[str, Any]) -> RunConfig:
    """RunConfig for ``train``/``sweep`` flags."""
    return load_run_config(
        command_call.get("config"),
        settings=get_settings(),
        preset=command_call.get("preset"),
        recipe=command_call.get("recipe"),
        seed=command_call.get("seed"),
        train_overrides={
            "total_steps": command_call.get("total_steps"),
            "warmup_steps": command_call.get("warmup_steps"),
        },
    )


def run_training(
    run_config: RunConfig,
    source: str,
    target: str,
    out_dir: Path,
    quiet: bool = False,
    summary_every: int = SUMMARY_EVERY,
) -> TrainResult:
    save_run_config(run_config, out_dir)
    progress = None if quiet else print_progress(run_config.train.total_steps, summary_every)
    return train(run_config.train, source, target, out_dir, progress=progress)


class TrainerService:
    """
    Service behind the ``train`` and ``sweep`` commands.

    Both resolve a RunConfig from the config file, preset, recipe, flags and
    environment, then train into an output directory that must be empty
    unless ``--force`` is given.
    """

    def __init__(self, summary_every: int = SUMMARY_EVERY):
        """
        Initialize the Trainer Service.

        Args:
            summary_every: Steps between progress lines on stdout (default: 100)
        """
        self.summary_every = summary_every
        logger.info("Initialized Trainer Service", summary_every=summary_every)

    def train(self, command_call: Optional[Dict[str, Any]] = None) -> str:
        """
        Handle ``train``.

        Args:
            command_call: Parsed arguments: config, source, target, out,
                preset, recipe, seed, total_steps, warmup_steps, force.

        Returns:
            Summary naming the final checkpoint.
        """
        command_call = command_call or {}

        # Resolve the run, then claim the output directory
        run_config = resolve_train_config(command_call)
        out_dir = Path(command_call["out"])
        prepare_output_dir(out_dir, bool(command_call.get("force")), patterns=RUN_OUTPUTS)

        logger.info(
            "[TrainerService.train] Starting training",
            source=command_call["source"],
            target=command_call["target"],
            out_dir=str(out_dir),
            preset=command_call.get("preset"),
            seed=run_config.train.seed,
        )
        try:
            result = run_training(
                run_config,
                command_call["source"],
                command_call["target"],
                out_dir,
                summary_every=self.summary_every,
            )
        except UdaForgeError:
            logger.error("[TrainerService.train] Training failed", exc_info=True)
            raise

        # Build response
        last = result.log.records[-1]
        return (
            f"Trained {len(result.log)} steps (final l_g1 {last.l_g1:.4f}); "
            f"checkpoint {out_dir / FINAL_CHECKPOINT}"
        )

    def sweep(self, command_call: Optional[Dict[str, Any]] = None) -> str:
        """
        Handle ``sweep``: one training per factor of a single loss weight.

        Args:
            command_call: Parsed ``train`` arguments plus eval_dataset, param,
                factors and parallel.

        Returns:
            The sweep table as text.
        """
        command_call = command_call or {}

        # Validate sweep flags before any training
        param = command_call.get("param", "w_prime")
        if param not in WEIGHT_NAMES:
            raise UnknownParameterError(
                f"unknown sweep parameter {param!r}; expected one of {', '.join(WEIGHT_NAMES)}"
            )
        factors = parse_factors(command_call.get("factors") or DEFAULT_FACTORS)
        parallel = int(command_call.get("parallel") or 1)
        if parallel < 1:
            raise ConfigError(f"parallel: must be at least 1, got {parallel}")

        # Base run shared by every sweep point
        run_config = resolve_train_config(command_call)
        out_dir = Path(command_call["out"])
        prepare_output_dir(
            out_dir,
            bool(command_call.get("force")),
            patterns=[SWEEP_FILE] + [f"{name}_x*" for name in WEIGHT_NAMES],
        )

        logger.info("[TrainerService.sweep] Starting sweep", param=param, factors=factors, parallel=parallel)
        try:
            frame = run_sweep(
                run_config,
                param,
                factors,
                command_call["source"],
                command_call["target"],
                command_call["eval_dataset"],
                out_dir,
                parallel=parallel,
            )
        except UdaForgeError:
            logger.error("[TrainerService.sweep] Sweep failed", exc_info=True)
            raise
        return frame.to_string(index=False) + f"\nTable written to {out_dir / SWEEP_FILE}"


_service: Optional[TrainerService] = None


def get_trainer_service() -> TrainerService:
    """Get or create the trainer service instance following the naming convention."""
    global _service
    if _service is None:
        _service = TrainerService()
    return _service
