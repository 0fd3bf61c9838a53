"""Scene configuration, domain tags and the in-memory Sample."""

from dataclasses import dataclass, replace
from enum import IntEnum
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

CLASS_NAMES: Tuple[str, ...] = ("ground", "sky", "block", "object", "pole")
GROUND, SKY, BLOCK, OBJECT, POLE = range(len(CLASS_NAMES))
VOID_LABEL = 255

DEFAULT_PALETTE: List[Tuple[float, float, float]] = [
    (0.36, 0.31, 0.26),  # ground
    (0.55, 0.74, 0.93),  # sky
    (0.72, 0.36, 0.30),  # block
    (0.93, 0.82, 0.22),  # object
    (0.24, 0.26, 0.32),  # pole
]


class Domain(IntEnum):
    SOURCE = 0
    TARGET = 1

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, value: str) -> "Domain":
        try:
            return cls[value.upper()]
        except KeyError as e:
            raise ValueError(f"unknown domain {value!r}, expected 'source' or 'target'") from e


class DomainStyle(BaseModel):
    """Appearance of one domain. Geometry never depends on these fields."""

    model_config = ConfigDict(extra="forbid")

    palette: List[Tuple[float, float, float]] = Field(default_factory=lambda: list(DEFAULT_PALETTE))
    noise_sigma: float = Field(default=0.03, ge=0.0)
    texture_amplitude: float = Field(default=0.0, ge=0.0)
    hue_offset: float = Field(default=0.0, ge=-1.0, le=1.0, description="Fraction of the hue circle")
    frequency_skew: float = Field(
        default=0.0, ge=0.0, lt=1.0, description="Probability of dropping each object and pole"
    )

    @field_validator("palette")
    @classmethod
    def _palette_in_unit_cube(cls, palette):
        for rgb in palette:
            if not all(0.0 <= c <= 1.0 for c in rgb):
                raise ValueError(f"palette colour {rgb} must lie in [0, 1]")
        return palette


def _target_style() -> DomainStyle:
    return DomainStyle(noise_sigma=0.08, texture_amplitude=0.06, hue_offset=0.12, frequency_skew=0.25)


class SceneSpec(BaseModel):
    """Size, classes, geometry ranges and per-domain appearance of generated scenes."""

    model_config = ConfigDict(extra="forbid")

    height: int = Field(default=64, ge=16)
    width: int = Field(default=64, ge=16)
    num_classes: int = Field(default=len(CLASS_NAMES), ge=2, le=len(CLASS_NAMES))
    block_count: Tuple[int, int] = (1, 4)
    object_count: Tuple[int, int] = (0, 3)
    pole_count: Tuple[int, int] = (0, 2)
    source: DomainStyle = Field(default_factory=DomainStyle)
    target: DomainStyle = Field(default_factory=_target_style)

    @field_validator("height", "width")
    @classmethod
    def _multiple_of_eight(cls, value: int) -> int:
        if value % 8:
            raise ValueError(f"must be a multiple of 8, got {value}")
        return value

    @field_validator("block_count", "object_count", "pole_count")
    @classmethod
    def _valid_range(cls, value: Tuple[int, int]) -> Tuple[int, int]:
        lo, hi = value
        if lo < 0 or hi < lo:
            raise ValueError(f"count range must satisfy 0 <= min <= max, got {value}")
        return value

    @model_validator(mode="after")
    def _palettes_cover_classes(self) -> "SceneSpec":
        for name in ("source", "target"):
            if len(getattr(self, name).palette) < self.num_classes:
                raise ValueError(f"{name}.palette needs at least {self.num_classes} colours")
        return self

    @property
    def class_names(self) -> Tuple[str, ...]:
        return CLASS_NAMES[: self.num_classes]

    def style(self, domain: Domain) -> DomainStyle:
        return self.source if domain == Domain.SOURCE else self.target


@dataclass(frozen=True, eq=False)
class Sample:
    """
    One scene: ``image`` is float32 ``[3, H, W]`` in [0, 1]; ``labels`` is uint8
    ``[H, W]`` holding class indices or 255 for void, or None once stripped.
    """

    image: np.ndarray
    labels: Optional[np.ndarray]
    domain: Domain
    seed: int
    num_classes: int

    @property
    def height(self) -> int:
        return self.image.shape[1]

    @property
    def width(self) -> int:
        return self.image.shape[2]

    def without_labels(self) -> "Sample":
        return replace(self, labels=None)

    def identical(self, other: "Sample") -> bool:
        """Bit-identical comparison of every field."""
        if (self.domain, self.seed, self.num_classes) != (other.domain, other.seed, other.num_classes):
            return False
        if self.image.dtype != other.image.dtype or not np.array_equal(self.image, other.image):
            return False
        if (self.labels is None) != (other.labels is None):
            return False
        return self.labels is None or np.array_equal(self.labels, other.labels)
