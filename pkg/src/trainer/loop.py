"""
The two-network training loop.

Each step samples a source and a target batch, runs G on both, updates D on
the mixed batch of detached predictions against the source one-hot ground
truth, then updates G on the full objective with D frozen. Target samples are
loaded with their labels stripped; nothing here can reach them.
"""

import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional, Union

import numpy as np
import structlog

from src.confmask.mask import build_reliability
from src.errors import DatasetError
from src.losses.functional import (
    loss_adversarial,
    loss_discriminator,
    loss_full,
    loss_self_teach,
    loss_supervised_ce,
)
from src.losses.weights import effective_self_teach_weight
from src.nets.discriminator import DiscriminatorParams, discriminator_forward
from src.nets.generator import GeneratorParams, generator_forward
from src.tensor import Tensor, backward
from src.toyscenes.spec import VOID_LABEL, Domain
from src.toyscenes.stats import ClassWeights, class_frequencies, one_hot
from src.toyscenes.storage import Dataset, load_dataset
from src.trainer.checkpoint import save_checkpoint
from src.trainer.config import TrainConfig
from src.trainer.log import StepRecord, TrainLog
from src.trainer.optim import Adam, SGDMomentum
from src.trainer.schedule import discriminator_poly_lr, poly_lr

logger = structlog.get_logger(__name__)

FINAL_CHECKPOINT = "checkpoint_final.udac"

PathLike = Union[str, Path]
Progress = Callable[[StepRecord], None]


def checkpoint_name(step: int) -> str:
    return f"checkpoint_{step:06d}.udac"


class BatchSampler:
    """Seeded shuffled passes over ``n`` items, ``batch_size`` indices at a time."""

    def __init__(self, n: int, batch_size: int, seed: np.random.SeedSequence):
        if n < 1:
            raise DatasetError("cannot draw batches from an empty dataset")
        self.n = n
        self.batch_size = batch_size
        self.rng = np.random.default_rng(seed)
        self._order = np.empty(0, dtype=np.int64)

    def next(self) -> np.ndarray:
        while self._order.size < self.batch_size:
            self._order = np.concatenate([self._order, self.rng.permutation(self.n)])
        batch, self._order = self._order[:self.batch_size], self._order[self.batch_size:]
        return batch


@dataclass
class TrainResult:
    log: TrainLog
    generator: GeneratorParams
    discriminator: Optional[DiscriminatorParams]
    checkpoints: List[Path]

    @property
    def final_checkpoint(self) -> Path:
        return self.checkpoints[-1]


def _check_datasets(source: Dataset, target: Dataset) -> None:
    if source.domain != Domain.SOURCE:
        raise DatasetError(f"source dataset holds {source.domain.label} samples")
    if target.domain != Domain.TARGET:
        raise DatasetError(f"target dataset holds {target.domain.label} samples")
    if not len(source) or not len(target):
        raise DatasetError(f"training needs samples in both domains (source {len(source)}, target {len(target)})")
    a, b = source.spec, target.spec
    if (a.height, a.width, a.num_classes) != (b.height, b.width, b.num_classes):
        raise DatasetError(
            f"source is {a.height}x{a.width} with {a.num_classes} classes, "
            f"target is {b.height}x{b.width} with {b.num_classes} classes"
        )


def train_on(
    cfg: TrainConfig,
    source: Dataset,
    target: Dataset,
    out_dir: PathLike,
    progress: Optional[Progress] = None,
) -> TrainResult:
    """
    Train on loaded datasets; see ``train``.

    ``target`` may carry labels; they are never read.
    """
    _check_datasets(source, target)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    num_classes = source.spec.num_classes
    switches = cfg.ablation
    weights = cfg.loss_weights
    class_weights: Optional[ClassWeights] = class_frequencies(source.samples) if switches.enable_class_weighting else None

    g_seed, d_seed, source_seed, target_seed = np.random.SeedSequence(cfg.seed).spawn(4)
    generator = GeneratorParams.initialize(num_classes, g_seed)
    discriminator = DiscriminatorParams.initialize(num_classes, d_seed) if switches.needs_discriminator else None
    g_opt = SGDMomentum(generator, momentum=cfg.momentum, weight_decay=cfg.weight_decay)
    d_opt = Adam(discriminator, betas=cfg.adam_betas, eps=cfg.adam_eps) if discriminator is not None else None
    if discriminator is not None:
        discriminator.freeze()

    source_images = np.stack([s.image for s in source.samples]).astype(np.float64)
    source_labels = np.stack([s.labels for s in source.samples])
    target_images = np.stack([s.image for s in target.samples]).astype(np.float64)
    source_batches = BatchSampler(len(source), cfg.batch_size, source_seed)
    target_batches = BatchSampler(len(target), cfg.batch_size, target_seed)

    logger.info(
        "Training started",
        out_dir=str(out_dir),
        total_steps=cfg.total_steps,
        warmup_steps=cfg.warmup_steps,
        seed=cfg.seed,
        source=len(source),
        target=len(target),
        **switches.model_dump(),
    )

    log = TrainLog()
    checkpoints: List[Path] = []
    for step in range(cfg.total_steps):
        started = time.perf_counter()
        lr = poly_lr(step, cfg)
        s_idx = source_batches.next()
        t_idx = target_batches.next()
        labels = source_labels[s_idx]
        onehot = one_hot(labels, num_classes)
        x_s = Tensor(source_images[s_idx])
        x_t = Tensor(target_images[t_idx])

        p_s = generator_forward(generator, x_s)
        p_t = generator_forward(generator, x_t)

        l_d = 0.0
        if discriminator is not None:
            discriminator.unfreeze()
            discriminator.zero_grad()
            fake = Tensor(np.concatenate([p_s.data, p_t.data]))
            d_fake = discriminator_forward(discriminator, fake)
            d_real = discriminator_forward(discriminator, onehot)
            real_valid = (labels != VOID_LABEL)[:, None, :, :]
            loss_d = loss_discriminator(d_fake, d_real, real_valid)
            backward(loss_d)
            d_opt.step(discriminator_poly_lr(step, cfg))
            discriminator.freeze()
            l_d = loss_d.item()

        generator.zero_grad()
        parts = {"l_g1": loss_supervised_ce(p_s, onehot)}
        d_t = None
        if switches.enable_adv:
            parts["l_g2_s"] = loss_adversarial(discriminator_forward(discriminator, p_s))
            d_t = discriminator_forward(discriminator, p_t)
            parts["l_g2_t"] = loss_adversarial(d_t)

        seed_fraction = mask_fraction = 0.0
        if switches.enable_self_teach:
            conf = d_t.data if d_t is not None else discriminator_forward(discriminator, p_t.detach()).data
            reliability = build_reliability(
                conf,
                p_t.data,
                cfg.mask,
                region_growing=switches.enable_region_growing,
                disc_weighting=switches.enable_disc_weighting,
            )
            seed_fraction = reliability.seed_fraction
            mask_fraction = reliability.mask_fraction
            if effective_self_teach_weight(weights.w_prime, step, cfg.warmup_steps) > 0.0:
                parts["l_g3"] = loss_self_teach(p_t, Tensor(reliability.weights), class_weights)

        loss_g = loss_full(parts, weights, step, cfg.warmup_steps)
        backward(loss_g)
        g_opt.step(lr)

        record = StepRecord(
            step=step,
            lr=lr,
            l_g1=parts["l_g1"].item(),
            l_g2_s=parts["l_g2_s"].item() if "l_g2_s" in parts else 0.0,
            l_g2_t=parts["l_g2_t"].item() if "l_g2_t" in parts else 0.0,
            l_g3=parts["l_g3"].item() if "l_g3" in parts else 0.0,
            l_d=l_d,
            mask_fraction=mask_fraction,
            seed_fraction=seed_fraction,
            ms=(time.perf_counter() - started) * 1000.0 if cfg.log_wall_time else 0.0,
        )
        log.append(record)
        logger.debug("Step complete", **record.model_dump())
        if progress is not None:
            progress(record)

        completed = step + 1
        if cfg.checkpoint_every and completed % cfg.checkpoint_every == 0:
            checkpoints.append(save_checkpoint(out_dir / checkpoint_name(completed), generator, discriminator, completed))

    checkpoints.append(save_checkpoint(out_dir / FINAL_CHECKPOINT, generator, discriminator, cfg.total_steps))
    log.write(out_dir)
    logger.info("Training finished", out_dir=str(out_dir), steps=len(log), final=str(checkpoints[-1]))
    return TrainResult(log=log, generator=generator, discriminator=discriminator, checkpoints=checkpoints)


def train(
    cfg: TrainConfig,
    source_dir: PathLike,
    target_dir: PathLike,
    out_dir: PathLike,
    progress: Optional[Progress] = None,
) -> TrainResult:
    """
    Run the full training schedule and write logs and checkpoints to ``out_dir``.

    Args:
        cfg: Validated training configuration.
        source_dir: Labeled source dataset directory.
        target_dir: Target dataset directory; read without labels.
        out_dir: Run directory, created if missing.
        progress: Called with every StepRecord as it is produced.

    Returns:
        TrainResult: Log, final networks and the written checkpoint paths.
    """
    source = load_dataset(source_dir, with_labels=True)
    target = load_dataset(target_dir, with_labels=False)
    return train_on(cfg, source, target, out_dir, progress)
