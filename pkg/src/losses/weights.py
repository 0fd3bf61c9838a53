"""Loss weights of the full objective and the self-teaching warm-up gate."""

from pydantic import BaseModel, ConfigDict, Field

from src.errors import UnknownParameterError

WEIGHT_NAMES = ("w_s", "w_t", "w_prime")


class LossWeights(BaseModel):
    """Weights of the adversarial terms on source and target and of the self-teaching term."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    w_s: float = Field(default=1e-2, ge=0.0)
    w_t: float = Field(default=1e-4, ge=0.0)
    w_prime: float = Field(default=1e-3, ge=0.0)

    def scaled(self, name: str, factor: float) -> "LossWeights":
        """Copy with one weight multiplied by ``factor``."""
        if name not in WEIGHT_NAMES:
            raise UnknownParameterError(f"unknown loss weight {name!r}; expected one of {', '.join(WEIGHT_NAMES)}")
        return LossWeights(**{**self.model_dump(), name: getattr(self, name) * factor})


def effective_self_teach_weight(w_prime: float, step: int, warmup_steps: int) -> float:
    """``w_prime``, or 0 while ``step < warmup_steps``."""
    return 0.0 if step < warmup_steps else w_prime
