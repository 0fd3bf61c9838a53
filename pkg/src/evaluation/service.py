"""
Evaluation Service

Scores checkpoints on labeled datasets and regenerates report files from
training logs.
"""

from pathlib import Path
from typing import Any, Dict, Optional

import structlog

from src.errors import FormatError, UdaForgeError
from src.evaluation.metrics import MetricsRecord, evaluate_checkpoint
from src.evaluation.report import LOSS_PLOT, MASK_PLOT, METRICS_FILE, PER_CLASS_FILE, emit_report
from src.orchestrator.run_config import prepare_output_dir
from src.trainer.log import JSONL_FILE, TrainLog

logger = structlog.get_logger(__name__)

REPORT_FILES = [METRICS_FILE, PER_CLASS_FILE, LOSS_PLOT, MASK_PLOT]


def _load_log(log_path: Optional[str], checkpoint: Optional[Path] = None) -> TrainLog:
    if log_path:
        path = Path(log_path)
        if not path.is_file():
            raise FormatError(f"{path}: training log not found")
        return TrainLog.read_jsonl(path)
    if checkpoint is not None and (checkpoint.parent / JSONL_FILE).is_file():
        return TrainLog.read_jsonl(checkpoint.parent / JSONL_FILE)
    return TrainLog()


def _format_metrics(record: MetricsRecord) -> str:
    lines = [f"mIoU {record.miou:.4f}" if record.miou is not None else "mIoU n/a"]
    for item in record.per_class:
        value = f"{item.iou:.4f}" if item.iou is not None else "absent"
        lines.append(f"  {item.class_name:<8} {value}")
    lines.append(f"  pixels evaluated: {record.pixels_evaluated}")
    return "\n".join(lines)


class EvaluationService:
    """
    Service behind the ``eval`` and ``report`` commands.

    Both write the same report files; ``eval`` computes the metrics from a
    checkpoint and a labeled dataset first.
    """

    def __init__(self):
        """Initialize the Evaluation Service."""
        logger.info("Initialized Evaluation Service", report_files=REPORT_FILES)

    def evaluate(self, command_call: Optional[Dict[str, Any]] = None) -> str:
        """
        Handle ``eval``.

        Args:
            command_call: Parsed arguments: checkpoint, dataset, out, log, force.
                Without ``log`` the run's ``train_log.jsonl`` next to the
                checkpoint is used when present.

        Returns:
            mIoU, per-class IoU and the report directory.
        """
        command_call = command_call or {}
        checkpoint = Path(command_call["checkpoint"])
        out_dir = Path(command_call["out"])
        logger.info(
            "[EvaluationService.evaluate] Evaluating checkpoint",
            checkpoint=str(checkpoint),
            dataset=command_call["dataset"],
        )
        # Score the checkpoint; the log only feeds the plots
        try:
            record = evaluate_checkpoint(checkpoint, command_call["dataset"])
            log = _load_log(command_call.get("log"), checkpoint)
        except UdaForgeError:
            logger.error("[EvaluationService.evaluate] Evaluation failed", exc_info=True)
            raise

        # Write the report
        prepare_output_dir(out_dir, bool(command_call.get("force")), patterns=REPORT_FILES)
        emit_report(log, record, out_dir)
        return f"{_format_metrics(record)}\nReport written to {out_dir}"

    def report(self, command_call: Optional[Dict[str, Any]] = None) -> str:
        """
        Handle ``report``: rebuild the report from a training log and optional metrics.

        Args:
            command_call: Parsed arguments: log, metrics, out.

        Returns:
            The written report files.
        """
        command_call = command_call or {}
        out_dir = Path(command_call["out"])
        log = _load_log(command_call["log"])

        # Optional metrics; without them metrics.json is not written
        metrics: Optional[MetricsRecord] = None
        if command_call.get("metrics"):
            path = Path(command_call["metrics"])
            if not path.is_file():
                raise FormatError(f"{path}: metrics file not found")
            try:
                metrics = MetricsRecord.model_validate_json(path.read_text(encoding="utf-8"))
            except ValueError as e:
                raise FormatError(f"{path}: invalid metrics document ({e})") from e

        written = emit_report(log, metrics, out_dir)
        logger.info("[EvaluationService.report] Report regenerated", files=len(written))
        return "\n".join(["Report written:"] + [f"  {p}" for p in written])


_service: Optional[EvaluationService] = None


def get_evaluation_service() -> EvaluationService:
    """Get or create the evaluation service instance following the naming convention."""
    global _service
    if _service is None:
        _service = EvaluationService()
    return _service
