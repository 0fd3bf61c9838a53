"""
Loss-weight sweeps: one training per multiplier of a single weight, each
scored by the target mIoU of its final checkpoint.

Runs go one after another unless more than one worker is requested, in which
case each training runs in its own worker process.
"""

import math
from collections import Counter
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import anyio
import pandas as pd
import structlog
from anyio import to_process

from src.errors import ConfigError, UnknownParameterError
from src.evaluation.metrics import evaluate_checkpoint
from src.losses.weights import WEIGHT_NAMES
from src.orchestrator.run_config import RunConfig, save_run_config
from src.trainer.loop import train

logger = structlog.get_logger(__name__)

DEFAULT_FACTORS = "0.1,0.25,0.5,1,2,4,10"
SWEEP_FILE = "sweep.csv"
SWEEP_COLUMNS = ["factor", "w_s", "w_t", "w_prime", "target_miou"]

PathLike = Union[str, Path]


def parse_factors(text: str) -> List[float]:
    """Comma-separated non-negative multipliers, in the given order."""
    factors = []
    for item in (text or "").split(","):
        item = item.strip()
        if not item:
            continue
        try:
            value = float(item)
        except ValueError as e:
            raise ConfigError(f"factors: {item!r} is not a number") from e
        if not math.isfinite(value) or value < 0.0:
            raise ConfigError(f"factors: {item!r} must be finite and non-negative")
        factors.append(value)
    if not factors:
        raise ConfigError("factors: at least one factor is required")
    repeated = sorted(label for label, n in Counter(f"{v:g}" for v in factors).items() if n > 1)
    if repeated:
        raise ConfigError(f"factors: repeated values {', '.join(repeated)}")
    return factors


def factor_dir_name(param: str, factor: float) -> str:
    return f"{param}_x{factor:g}"


def sweep_configs(run_config: RunConfig, param: str, factors: Sequence[float]) -> List[RunConfig]:
    """One RunConfig per factor with ``param`` scaled."""
    if param not in WEIGHT_NAMES:
        raise UnknownParameterError(f"unknown sweep parameter {param!r}; expected one of {', '.join(WEIGHT_NAMES)}")
    configs = []
    for factor in factors:
        weights = run_config.train.loss_weights.scaled(param, factor)
        train_cfg = run_config.train.model_copy(update={"loss_weights": weights})
        configs.append(run_config.model_copy(update={"train": train_cfg}))
    return configs


def run_factor(
    config_json: str,
    factor: float,
    source: str,
    target: str,
    out_dir: str,
    eval_dataset: str,
) -> Dict[str, Optional[float]]:
    """Train and score one sweep point; module-level so worker processes can import it."""
    run_config = RunConfig.model_validate_json(config_json)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_run_config(run_config, out)
    result = train(run_config.train, source, target, out)
    record = evaluate_checkpoint(result.final_checkpoint, eval_dataset)
    weights = run_config.train.loss_weights
    return {
        "factor": factor,
        "w_s": weights.w_s,
        "w_t": weights.w_t,
        "w_prime": weights.w_prime,
        "target_miou": record.miou,
    }


async def _run_parallel(jobs: List[tuple], workers: int) -> List[Dict[str, Optional[float]]]:
    limiter = anyio.CapacityLimiter(workers)
    results: List[Optional[Dict[str, Optional[float]]]] = [None] * len(jobs)
    errors: List[BaseException] = []

    async def run_one(index: int, job: tuple) -> None:
        try:
            results[index] = await to_process.run_sync(run_factor, *job, limiter=limiter)
        except Exception as e:  # re-raised below, first failure wins
            errors.append(e)

    async with anyio.create_task_group() as tg:
        for index, job in enumerate(jobs):
            tg.start_soon(run_one, index, job)
    if errors:
        raise errors[0]
    return results


def run_sweep(
    run_config: RunConfig,
    param: str,
    factors: Sequence[float],
    source: PathLike,
    target: PathLike,
    eval_dataset: PathLike,
    out_dir: PathLike,
    parallel: int = 1,
) -> pd.DataFrame:
    """
    Train once per factor and write ``sweep.csv``.

    Args:
        run_config: Base configuration; only ``train.loss_weights.<param>`` varies.
        param: ``w_s``, ``w_t`` or ``w_prime``.
        factors: Multipliers, one run each, kept in order in the table.
        source: Source training dataset.
        target: Target training dataset.
        eval_dataset: Labeled target dataset scored after each run.
        out_dir: Sweep directory; run ``k`` trains into ``<param>_x<factor>``.
        parallel: Number of concurrent worker processes.

    Returns:
        The sweep table, one row per factor.
    """
    configs = sweep_configs(run_config, param, factors)
    names = [factor_dir_name(param, factor) for factor in factors]
    duplicates = sorted({name for name in names if names.count(name) > 1})
    if duplicates:
        raise ConfigError(f"factors: repeated sweep points {', '.join(duplicates)}")
    out_dir = Path(out_dir)
    jobs = [
        (
            cfg.model_dump_json(),
            factor,
            str(source),
            str(target),
            str(out_dir / name),
            str(eval_dataset),
        )
        for cfg, factor, name in zip(configs, factors, names)
    ]
    logger.info("Sweep started", param=param, factors=list(factors), parallel=parallel, out_dir=str(out_dir))

    if parallel > 1 and len(jobs) > 1:
        rows = anyio.run(_run_parallel, jobs, parallel)
    else:
        rows = []
        for job in jobs:
            rows.append(run_factor(*job))
            logger.info("Sweep point finished", **rows[-1])

    frame = pd.DataFrame(rows, columns=SWEEP_COLUMNS)
    out_dir.mkdir(parents=True, exist_ok=True)
    frame.to_csv(out_dir / SWEEP_FILE, index=False, lineterminator="\n", na_rep="")
    logger.info("Sweep finished", rows=len(frame), table=str(out_dir / SWEEP_FILE))
    return frame
