"""
Offline report files: metrics.json, per_class_iou.csv and two SVG plots.

Plots are drawn on bare Figure objects with a fixed hash salt and no date
metadata, so the same inputs always produce the same bytes.
"""

from pathlib import Path
from typing import List, Optional, Sequence, Union

import matplotlib
import pandas as pd
import structlog
from matplotlib.figure import Figure

from src.evaluation.metrics import MetricsRecord
from src.trainer.log import TrainLog

logger = structlog.get_logger(__name__)

METRICS_FILE = "metrics.json"
PER_CLASS_FILE = "per_class_iou.csv"
LOSS_PLOT = "loss_curves.svg"
MASK_PLOT = "mask_fraction.svg"

LOSS_SERIES = ("l_g1", "l_g2_s", "l_g2_t", "l_g3", "l_d")
MASK_SERIES = ("mask_fraction", "seed_fraction")

_SVG_PARAMS = {
    "svg.hashsalt": "uda-forge",
    "svg.fonttype": "none",
    "path.simplify": False,
}

PathLike = Union[str, Path]


def _line_plot(frame: pd.DataFrame, series: Sequence[str], ylabel: str, title: str, path: Path) -> None:
    with matplotlib.rc_context(_SVG_PARAMS):
        fig = Figure(figsize=(6.4, 4.0))
        ax = fig.add_subplot()
        for name in series:
            ax.plot(frame["step"].to_numpy(dtype=float), frame[name].to_numpy(dtype=float), label=name, linewidth=1.0)
        ax.set_xlabel("step")
        ax.set_ylabel(ylabel)
        ax.set_title(title)
        if len(frame):
            ax.legend(loc="upper right", fontsize="small")
        fig.savefig(path, format="svg", metadata={"Date": None})


def per_class_frame(metrics: Optional[MetricsRecord]) -> pd.DataFrame:
    rows = [] if metrics is None else [{"class": c.class_name, "iou": c.iou} for c in metrics.per_class]
    return pd.DataFrame(rows, columns=["class", "iou"])


def emit_report(log: TrainLog, metrics: Optional[MetricsRecord], out_dir: PathLike) -> List[Path]:
    """
    Write the report files into ``out_dir``.

    Without metrics, ``metrics.json`` is not written and the per-class CSV
    holds only its header.

    Returns:
        The written paths, in a fixed order.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: List[Path] = []

    if metrics is not None:
        path = out_dir / METRICS_FILE
        path.write_text(metrics.to_json(), encoding="utf-8")
        written.append(path)

    path = out_dir / PER_CLASS_FILE
    per_class_frame(metrics).to_csv(path, index=False, lineterminator="\n", na_rep="")
    written.append(path)

    frame = log.to_frame()
    _line_plot(frame, LOSS_SERIES, "loss", "training losses", out_dir / LOSS_PLOT)
    _line_plot(frame, MASK_SERIES, "fraction of target pixels", "reliability mask coverage", out_dir / MASK_PLOT)
    written.extend([out_dir / LOSS_PLOT, out_dir / MASK_PLOT])

    logger.info("Report written", out_dir=str(out_dir), steps=len(log), with_metrics=metrics is not None)
    return written
