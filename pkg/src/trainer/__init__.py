"""Training loop, optimizers, schedule, checkpoints and step logs."""

from src.trainer.checkpoint import load_generator, read_checkpoint, save_checkpoint, write_checkpoint
from src.trainer.config import AblationSwitches, TrainConfig
from src.trainer.log import StepRecord, TrainLog
from src.trainer.loop import TrainResult, train, train_on
from src.trainer.optim import Adam, AdamState, SGDMomentum, adam_step, sgd_momentum_step
from src.trainer.schedule import discriminator_poly_lr, poly_lr

__all__ = [
    "AblationSwitches",
    "Adam",
    "AdamState",
    "SGDMomentum",
    "StepRecord",
    "TrainConfig",
    "TrainLog",
    "TrainResult",
    "adam_step",
    "load_generator",
    "discriminator_poly_lr",
    "poly_lr",
    "read_checkpoint",
    "save_checkpoint",
    "sgd_momentum_step",
    "train",
    "train_on",
    "write_checkpoint",
]
