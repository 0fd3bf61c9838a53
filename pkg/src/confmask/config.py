"""Thresholds and growth settings for the reliability mask."""

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

DEFAULT_T_U = 0.2
DEFAULT_T_R = 1.0 - 1e-5
# at most one class can hold more than half the mass, so regions never compete
MIN_T_R = 0.5


class MaskConfig(BaseModel):
    """
    Seed threshold ``t_u``, growth threshold ``t_r`` and neighbourhood.

    ``t_r`` lives in ``[0.5, 1)``. ``max_growth_rounds`` caps the number of
    breadth-first layers added around the seeds; None grows to a fixpoint
    and 0 disables growth.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    t_u: float = Field(default=DEFAULT_T_U, gt=0.0, lt=1.0)
    t_r: float = Field(default=DEFAULT_T_R, ge=MIN_T_R, lt=1.0)
    connectivity: Literal[4, 8] = 4
    max_growth_rounds: Optional[int] = Field(default=None, ge=0)
