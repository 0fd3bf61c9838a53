"""Training configuration and ablation switches."""

from typing import Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.confmask.config import MaskConfig
from src.losses.weights import LossWeights


class AblationSwitches(BaseModel):
    """Which parts of the objective are active."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    enable_adv: bool = True
    enable_self_teach: bool = True
    enable_region_growing: bool = True
    enable_disc_weighting: bool = True
    enable_class_weighting: bool = True

    @property
    def needs_discriminator(self) -> bool:
        return self.enable_adv or self.enable_self_teach


class TrainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    total_steps: int = Field(default=2000, ge=1)
    warmup_steps: Optional[int] = Field(default=None, ge=0)
    batch_size: int = Field(default=2, ge=1)
    lr_start: float = Field(default=1e-4, gt=0.0)
    lr_end: float = Field(default=1e-6, ge=0.0)
    lr_power: float = Field(default=0.9, gt=0.0)
    momentum: float = Field(default=0.9, ge=0.0, lt=1.0)
    weight_decay: float = Field(default=1e-4, ge=0.0)
    adam_betas: Tuple[float, float] = (0.9, 0.999)
    adam_eps: float = Field(default=1e-8, gt=0.0)
    d_lr: Optional[float] = Field(default=None, gt=0.0)
    loss_weights: LossWeights = Field(default_factory=LossWeights)
    mask: MaskConfig = Field(default_factory=MaskConfig)
    ablation: AblationSwitches = Field(default_factory=AblationSwitches)
    seed: int = Field(default=0, ge=0, lt=2**64)
    checkpoint_every: int = Field(default=500, ge=0)
    log_wall_time: bool = True

    @field_validator("adam_betas")
    @classmethod
    def _betas_in_range(cls, betas: Tuple[float, float]) -> Tuple[float, float]:
        if not all(0.0 <= b < 1.0 for b in betas):
            raise ValueError(f"adam betas must lie in [0, 1), got {betas}")
        return betas

    @model_validator(mode="after")
    def _check_schedule(self) -> "TrainConfig":
        if self.warmup_steps is None:
            self.warmup_steps = self.total_steps // 4
        if self.warmup_steps > self.total_steps:
            raise ValueError(f"warmup_steps must be <= total_steps ({self.warmup_steps} > {self.total_steps})")
        if self.lr_end > self.lr_start:
            raise ValueError(f"lr_end must be <= lr_start ({self.lr_end} > {self.lr_start})")
        return self

    @property
    def discriminator_lr(self) -> float:
        """Starting Adam step size of the discriminator; the generator's start rate unless set."""
        return self.lr_start if self.d_lr is None else self.d_lr
