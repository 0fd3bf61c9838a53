"""
Seed masks, region growing and reliability weights.

Growth is a breadth-first search seeded in row-major order. A seed pixel
carries the argmax class of the probability map; a pixel admitted by growth
inherits the class of the region that reached it. A neighbour is admitted
when its probability for that class is strictly above ``t_r``. With ``t_r``
at least 0.5 a pixel passes for at most one class, so the grown mask does
not depend on which region reaches a pixel first.
"""

from collections import deque
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import structlog

from src.confmask.config import MIN_T_R, MaskConfig
from src.errors import ConfigError, ShapeError

logger = structlog.get_logger(__name__)

NEIGHBOURS_4: Tuple[Tuple[int, int], ...] = ((-1, 0), (0, -1), (0, 1), (1, 0))
NEIGHBOURS_8: Tuple[Tuple[int, int], ...] = (
    (-1, -1), (-1, 0), (-1, 1),
    (0, -1), (0, 1),
    (1, -1), (1, 0), (1, 1),
)


def neighbour_offsets(connectivity: int) -> Tuple[Tuple[int, int], ...]:
    if connectivity == 4:
        return NEIGHBOURS_4
    if connectivity == 8:
        return NEIGHBOURS_8
    raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")


def threshold_mask(conf: np.ndarray, t_u: float) -> np.ndarray:
    """``1`` where ``conf > t_u`` (strict), ``0`` elsewhere; same shape as ``conf``."""
    return (np.asarray(conf) > t_u).astype(np.uint8)


def pseudo_labels(probmap: np.ndarray) -> np.ndarray:
    """Argmax over the class axis (``-3``); ties go to the lowest class index."""
    probmap = np.asarray(probmap)
    if probmap.ndim < 3:
        raise ShapeError(f"probmap must be [..., C, H, W], got shape {probmap.shape}")
    return np.argmax(probmap, axis=-3)


def grow_mask(
    seeds: np.ndarray,
    probmap: np.ndarray,
    t_r: float,
    connectivity: int = 4,
    max_rounds: Optional[int] = None,
) -> np.ndarray:
    """
    Grow a seed mask over neighbours confident in the seed's class.

    Args:
        seeds: ``[H, W]`` 0/1 mask.
        probmap: ``[C, H, W]`` class distributions.
        t_r: Admission threshold on the inherited class probability, in
            ``[0.5, 1)``.
        connectivity: 4 or 8.
        max_rounds: Number of breadth-first layers to add; None until the
            frontier empties.

    Returns:
        np.ndarray: ``[H, W]`` uint8 mask containing every seed.
    """
    seeds = np.asarray(seeds)
    probmap = np.asarray(probmap)
    if seeds.ndim != 2 or probmap.ndim != 3 or probmap.shape[1:] != seeds.shape:
        raise ShapeError(f"seeds {seeds.shape} and probmap {probmap.shape} are not aligned")
    if not MIN_T_R <= t_r < 1.0:
        raise ConfigError(f"t_r must lie in [{MIN_T_R}, 1), got {t_r}")
    offsets = neighbour_offsets(connectivity)
    h, w = seeds.shape

    grown = (seeds != 0).astype(np.uint8)
    if max_rounds == 0 or not grown.any():
        return grown

    labels = pseudo_labels(probmap)
    admissible = (probmap > t_r).tolist()
    visited = grown.astype(bool).tolist()
    cls_of = labels.tolist()

    frontier = deque((int(y), int(x), 0) for y, x in zip(*np.nonzero(grown)))
    while frontier:
        y, x, depth = frontier.popleft()
        if max_rounds is not None and depth >= max_rounds:
            continue
        c = cls_of[y][x]
        ok = admissible[c]
        for dy, dx in offsets:
            ny, nx = y + dy, x + dx
            if 0 <= ny < h and 0 <= nx < w and not visited[ny][nx] and ok[ny][nx]:
                visited[ny][nx] = True
                cls_of[ny][nx] = c
                frontier.append((ny, nx, depth + 1))

    return np.asarray(visited, dtype=np.uint8)


def grow_masks(
    seeds: np.ndarray,
    probmaps: np.ndarray,
    t_r: float,
    connectivity: int = 4,
    max_rounds: Optional[int] = None,
) -> np.ndarray:
    """Batched ``grow_mask`` over ``[B, 1, H, W]`` seeds and ``[B, C, H, W]`` probmaps."""
    if seeds.ndim != 4 or seeds.shape[1] != 1 or probmaps.ndim != 4 or probmaps.shape[0] != seeds.shape[0]:
        raise ShapeError(f"batched seeds {seeds.shape} and probmaps {probmaps.shape} are not aligned")
    return np.stack(
        [grow_mask(s[0], p, t_r, connectivity, max_rounds)[None] for s, p in zip(seeds, probmaps)]
    )


def reliability_weights(grown: np.ndarray, conf: np.ndarray) -> np.ndarray:
    """Discriminator confidence on the grown mask, zero elsewhere."""
    grown = np.asarray(grown)
    conf = np.asarray(conf, dtype=np.float64)
    if grown.shape != conf.shape:
        raise ShapeError(f"mask shape {grown.shape} does not match confidence shape {conf.shape}")
    return grown.astype(np.float64) * conf


@dataclass(frozen=True, eq=False)
class Reliability:
    seeds: np.ndarray  # uint8, shaped like conf
    grown: np.ndarray  # uint8, shaped like conf
    weights: np.ndarray  # float64, shaped like conf

    @property
    def seed_fraction(self) -> float:
        return float(self.seeds.mean()) if self.seeds.size else 0.0

    @property
    def mask_fraction(self) -> float:
        return float(self.grown.mean()) if self.grown.size else 0.0


def build_reliability(
    conf: np.ndarray,
    probmap: np.ndarray,
    cfg: MaskConfig,
    region_growing: bool = True,
    disc_weighting: bool = True,
) -> Reliability:
    """
    Seeds, grown mask and weight map for a ``[B, 1, H, W]`` confidence batch.

    With ``region_growing`` off the grown mask is the seed mask. With
    ``disc_weighting`` off the weights are 1 on the mask instead of the
    confidence. Both off is the plain hard-threshold scheme.
    """
    conf = np.asarray(conf, dtype=np.float64)
    probmap = np.asarray(probmap, dtype=np.float64)
    if conf.ndim != 4 or conf.shape[1] != 1 or probmap.ndim != 4 or probmap.shape[0] != conf.shape[0] \
            or probmap.shape[2:] != conf.shape[2:]:
        raise ShapeError(f"confidence {conf.shape} and probmap {probmap.shape} are not aligned")

    seeds = threshold_mask(conf, cfg.t_u)
    if region_growing:
        grown = grow_masks(seeds, probmap, cfg.t_r, cfg.connectivity, cfg.max_growth_rounds)
    else:
        grown = seeds.copy()
    if disc_weighting:
        weights = reliability_weights(grown, conf)
    else:
        weights = grown.astype(np.float64)
    return Reliability(seeds=seeds, grown=grown, weights=weights)
