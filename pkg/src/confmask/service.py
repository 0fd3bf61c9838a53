"""
Confidence Mask Service

Applies the seed threshold, region growing and reliability weighting to a
probability map and a discriminator confidence map read from map files.
"""

from pathlib import Path
from typing import Any, Dict, Optional

import structlog
from pydantic import ValidationError

from src.confmask.config import DEFAULT_T_R, DEFAULT_T_U, MaskConfig
from src.confmask.mask import Reliability, build_reliability
from src.errors import FormatError, ShapeError, UdaForgeError
from src.orchestrator.run_config import config_error_from, prepare_output_dir
from src.toyscenes.storage import MapKind, read_map, write_map

logger = structlog.get_logger(__name__)

MASK_FILE = "mask.udam"
WEIGHTS_FILE = "weights.udam"


class ConfmaskService:
    """
    Service running the mask pipeline on stored maps.

    Reads a ``[C, H, W]`` probability map and a ``[1, H, W]`` confidence map,
    and writes the grown mask and the reliability weights as map files.
    """

    def __init__(self):
        """Initialize the Confidence Mask Service."""
        logger.info("Initialized Confidence Mask Service", t_u=DEFAULT_T_U, t_r=DEFAULT_T_R)

    def compute(self, probmap_path: Path, confmap_path: Path, cfg: MaskConfig) -> Reliability:
        """
        Seeds, grown mask and weights for one pair of stored maps.

        Args:
            probmap_path: Probability map file, at least two channels.
            confmap_path: Confidence map file, one channel.
            cfg: Thresholds and neighbourhood.

        Returns:
            Reliability: Arrays shaped ``[1, 1, H, W]``.

        Raises:
            FormatError: If a map is unreadable or has the wrong channel count.
            ShapeError: If the two maps differ in height or width.
        """
        probmap = read_map(probmap_path)
        confmap = read_map(confmap_path)

        # Validate channel counts and alignment before any growth
        if probmap.values.shape[0] < 2:
            raise FormatError(f"{probmap_path}: probability map needs at least 2 channels")
        if confmap.values.shape[0] != 1:
            raise FormatError(f"{confmap_path}: confidence map must have 1 channel, got {confmap.values.shape[0]}")
        if probmap.values.shape[1:] != confmap.values.shape[1:]:
            raise ShapeError(
                f"probability map is {probmap.values.shape[1]}x{probmap.values.shape[2]} but confidence map is "
                f"{confmap.values.shape[1]}x{confmap.values.shape[2]}"
            )
        return build_reliability(confmap.values[None], probmap.values[None], cfg)

    def mask(self, command_call: Optional[Dict[str, Any]] = None) -> str:
        """
        Handle ``mask``.

        Args:
            command_call: Parsed arguments: probmap, confmap, t_u, t_r,
                connectivity, max_growth_rounds, out, force.

        Returns:
            Summary with the written files and mask coverage.
        """
        command_call = command_call or {}

        # Thresholds from flags, validated before any file is read
        try:
            cfg = MaskConfig(
                t_u=command_call.get("t_u", DEFAULT_T_U),
                t_r=command_call.get("t_r", DEFAULT_T_R),
                connectivity=command_call.get("connectivity", 4),
                max_growth_rounds=command_call.get("max_growth_rounds"),
            )
        except ValidationError as e:
            raise config_error_from(e, prefix="mask") from e

        out_dir = Path(command_call["out"])
        logger.info(
            "[ConfmaskService.mask] Building reliability mask",
            probmap=command_call["probmap"],
            confmap=command_call["confmap"],
            t_u=cfg.t_u,
            t_r=cfg.t_r,
            connectivity=cfg.connectivity,
        )

        # Seeds, growth and weights
        try:
            result = self.compute(Path(command_call["probmap"]), Path(command_call["confmap"]), cfg)
        except UdaForgeError:
            logger.error("[ConfmaskService.mask] Could not build mask", exc_info=True)
            raise

        # Write outputs only once the mask was built
        prepare_output_dir(out_dir, bool(command_call.get("force")), patterns=[MASK_FILE, WEIGHTS_FILE])
        write_map(out_dir / MASK_FILE, result.grown[0], MapKind.MASK)
        write_map(out_dir / WEIGHTS_FILE, result.weights[0], MapKind.WEIGHTS)

        logger.info(
            "[ConfmaskService.mask] Mask written",
            seed_fraction=result.seed_fraction,
            mask_fraction=result.mask_fraction,
        )
        return (
            f"seed fraction {result.seed_fraction:.4f}, grown fraction {result.mask_fraction:.4f}\n"
            f"  {out_dir / MASK_FILE}\n  {out_dir / WEIGHTS_FILE}"
        )


_service: Optional[ConfmaskService] = None


def get_confmask_service() -> ConfmaskService:
    """Get or create the confmask service instance following the naming convention."""
    global _service
    if _service is None:
        _service = ConfmaskService()
    return _service
