"""
Toy Scenes Service

Generates the source, target and optional labeled validation splits for a
run from the scene section of a run config.
"""

from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import structlog

from src.errors import ConfigError
from src.orchestrator.run_config import load_run_config, prepare_output_dir, resolve_seed
from src.settings import get_settings
from src.toyscenes.generator import generate_scene
from src.toyscenes.spec import Domain, Sample, SceneSpec
from src.toyscenes.storage import write_dataset

logger = structlog.get_logger(__name__)

# split name, domain, stream id used for seed derivation
SPLITS: Tuple[Tuple[str, Domain, int], ...] = (
    ("source", Domain.SOURCE, 0),
    ("target", Domain.TARGET, 1),
    ("source_val", Domain.SOURCE, 2),
    ("target_val", Domain.TARGET, 3),
)


def derive_sample_seed(base_seed: int, stream: int, index: int) -> int:
    """u64 sample seed for ``(base seed, split stream, index)``."""
    state = np.random.SeedSequence([base_seed, stream, index]).generate_state(1, dtype=np.uint64)
    return int(state[0])


def generate_split(spec: SceneSpec, domain: Domain, stream: int, count: int, base_seed: int) -> List[Sample]:
    return [generate_scene(spec, domain, derive_sample_seed(base_seed, stream, i)) for i in range(count)]


class ToyscenesService:
    """
    Service writing procedural dataset directories.

    Each split draws its sample seeds from its own stream of the base seed,
    so source, target and validation scenes never coincide.
    """

    def __init__(self):
        """Initialize the Toy Scenes Service."""
        logger.info("Initialized Toy Scenes Service", splits=[name for name, _, _ in SPLITS])

    def generate(
        self,
        spec: SceneSpec,
        out_dir: Path,
        counts: Dict[str, int],
        base_seed: int,
    ) -> List[Path]:
        """
        Generate and write every requested split under ``out_dir``.

        Args:
            spec: Scene size, classes and per-domain appearance.
            out_dir: Parent directory; each split becomes ``out_dir/<split>``.
            counts: Samples per split name. Training splits are always
                written, even when empty; validation splits only when
                their count is positive.
            base_seed: Seed all sample seeds derive from.

        Returns:
            The dataset directories, in split order.
        """
        written = []
        for split, domain, stream in SPLITS:
            count = counts.get(split, 0)
            if split.endswith("_val") and count == 0:
                continue

            # Render the split, then write meta.json and the sample files
            samples = generate_split(spec, domain, stream, count, base_seed)
            written.append(write_dataset(out_dir / split, samples, spec, domain, split))
            logger.info("[ToyscenesService.generate] Split written", split=split, count=count)
        return written

    def generate_datasets(self, command_call: Optional[Dict[str, Any]] = None) -> str:
        """
        Handle ``gen-data``.

        Args:
            command_call: Parsed arguments: config, out, count_source,
                count_target, count_eval, seed, force.

        Returns:
            Summary of the written directories.
        """
        command_call = command_call or {}

        # Resolve config and seed: file < UDA_FORGE_SEED < --seed
        settings = get_settings()
        run_config = load_run_config(command_call.get("config"), settings=settings)
        base_seed = resolve_seed(command_call.get("seed"), settings, run_config.train.seed)
        out_dir = Path(command_call["out"])
        counts = {
            "source": int(command_call.get("count_source", 0)),
            "target": int(command_call.get("count_target", 0)),
            "source_val": int(command_call.get("count_eval", 0)),
            "target_val": int(command_call.get("count_eval", 0)),
        }
        if any(v < 0 for v in counts.values()):
            raise ConfigError(f"sample counts must be non-negative, got {counts}")

        logger.info(
            "[ToyscenesService.generate_datasets] Generating datasets",
            out_dir=str(out_dir),
            seed=base_seed,
            **counts,
        )
        # Refuse to mix with an earlier run unless --force
        prepare_output_dir(out_dir, bool(command_call.get("force")), patterns=[name for name, _, _ in SPLITS])
        written = self.generate(run_config.scene, out_dir, counts, base_seed)

        # Build response
        lines = [f"Wrote {len(written)} dataset(s) with seed {base_seed}:"]
        for directory in written:
            lines.append(f"  {directory}")
        return "\n".join(lines)


_service: Optional[ToyscenesService] = None


def get_toyscenes_service() -> ToyscenesService:
    """Get or create the toy scenes service instance following the naming convention."""
    global _service
    if _service is None:
        _service = ToyscenesService()
    return _service
