"""Polynomial learning-rate decay."""

from src.trainer.config import TrainConfig


def poly_lr(step: int, cfg: TrainConfig) -> float:
    """
    ``(lr_start - lr_end) * (1 - step / total_steps) ** lr_power + lr_end``.

    Both endpoints are returned exactly. Steps outside ``[0, total_steps]``
    are rejected.
    """
    if not 0 <= step <= cfg.total_steps:
        raise ValueError(f"step {step} outside [0, {cfg.total_steps}]")
    if step == 0:
        return cfg.lr_start
    if step == cfg.total_steps:
        return cfg.lr_end
    return (cfg.lr_start - cfg.lr_end) * (1.0 - step / cfg.total_steps) ** cfg.lr_power + cfg.lr_end


def discriminator_poly_lr(step: int, cfg: TrainConfig) -> float:
    """The generator's decay rescaled to start at ``cfg.discriminator_lr``."""
    lr = poly_lr(step, cfg)
    if cfg.d_lr is None:
        return lr
    return lr * (cfg.d_lr / cfg.lr_start)
