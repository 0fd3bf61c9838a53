"""
Procedural street-like scenes.

A scene is a sky band over a ground band, a few axis-aligned blocks standing
on the horizon, small square objects on the ground and one-pixel-wide poles.
Geometry is drawn from a generator seeded by the sample seed alone, so a
source and a target sample with the same seed share their layout. Everything
domain-specific (colours, noise, texture and the chance of dropping small
objects) comes from a second generator seeded by ``(seed, domain)``.
"""

from typing import List, Tuple

import numpy as np
from matplotlib.colors import hsv_to_rgb, rgb_to_hsv

from src.toyscenes.spec import BLOCK, GROUND, OBJECT, POLE, SKY, Domain, DomainStyle, Sample, SceneSpec

# (class, top, bottom, left, right), half-open
Shape = Tuple[int, int, int, int, int]

_GEOMETRY_STREAM = 0
_APPEARANCE_STREAM = 1
PALETTE_JITTER = 0.03
BRIGHTNESS_JITTER = 0.05


def _draw_count(rng: np.random.Generator, bounds: Tuple[int, int]) -> int:
    return int(rng.integers(bounds[0], bounds[1] + 1))


def _layout(spec: SceneSpec, rng: np.random.Generator) -> Tuple[int, List[Shape], List[Shape]]:
    h, w = spec.height, spec.width
    horizon = int(rng.integers(round(0.35 * h), round(0.6 * h) + 1))

    blocks: List[Shape] = []
    for _ in range(_draw_count(rng, spec.block_count)):
        bw = int(rng.integers(max(2, w // 8), max(3, w // 3) + 1))
        bh = int(rng.integers(max(2, h // 8), max(3, int(h / 2.5)) + 1))
        left = int(rng.integers(0, w - bw + 1))
        bottom = min(h, horizon + int(rng.integers(0, h // 8 + 1)))
        blocks.append((BLOCK, max(0, bottom - bh), bottom, left, left + bw))

    small: List[Shape] = []
    for _ in range(_draw_count(rng, spec.object_count)):
        size = int(rng.integers(2, 5))
        top = int(rng.integers(horizon, h - size + 1))
        left = int(rng.integers(0, w - size + 1))
        small.append((OBJECT, top, top + size, left, left + size))
    for _ in range(_draw_count(rng, spec.pole_count)):
        x = int(rng.integers(0, w))
        height = int(rng.integers(h // 4, h // 2 + 1))
        bottom = int(rng.integers(horizon, min(h, horizon + h // 8) + 1))
        small.append((POLE, max(0, bottom - height), bottom, x, x + 1))
    return horizon, blocks, small


def rotate_hue(palette: np.ndarray, offset: float) -> np.ndarray:
    """Shift every colour around the hue circle by ``offset`` turns."""
    hsv = rgb_to_hsv(palette)
    hsv[..., 0] = np.mod(hsv[..., 0] + offset, 1.0)
    return hsv_to_rgb(hsv)


def _render(labels: np.ndarray, style: DomainStyle, num_classes: int, rng: np.random.Generator) -> np.ndarray:
    h, w = labels.shape
    palette = np.asarray(style.palette[:num_classes], dtype=np.float64)
    if style.hue_offset:
        palette = rotate_hue(palette, style.hue_offset)
    palette = np.clip(palette + rng.normal(0.0, PALETTE_JITTER, palette.shape), 0.0, 1.0)
    brightness = 1.0 + rng.normal(0.0, BRIGHTNESS_JITTER)

    image = palette[labels] * brightness
    image += rng.normal(0.0, style.noise_sigma, image.shape)
    if style.texture_amplitude:
        phase = rng.uniform(0.0, 2.0 * np.pi)
        freq = rng.uniform(0.3, 0.8)
        yy, xx = np.mgrid[0:h, 0:w]
        image += style.texture_amplitude * np.sin(freq * (xx + yy) + phase)[..., None]
    return np.clip(image, 0.0, 1.0).astype(np.float32).transpose(2, 0, 1).copy()


def generate_scene(spec: SceneSpec, domain: Domain, seed: int) -> Sample:
    """
    Deterministic scene for ``(spec, domain, seed)``.

    Classes at or above ``spec.num_classes`` are not painted, so a two-class
    spec yields ground and sky only.
    """
    domain = Domain(domain)
    geometry = np.random.default_rng(np.random.SeedSequence([seed, _GEOMETRY_STREAM]))
    appearance = np.random.default_rng(np.random.SeedSequence([seed, _APPEARANCE_STREAM, int(domain)]))
    style = spec.style(domain)

    horizon, blocks, small = _layout(spec, geometry)
    keep = appearance.random(len(small)) >= style.frequency_skew

    labels = np.full((spec.height, spec.width), GROUND, dtype=np.uint8)
    labels[:horizon] = SKY
    shapes = blocks + [shape for shape, kept in zip(small, keep) if kept]
    for cls, top, bottom, left, right in shapes:
        if cls < spec.num_classes:
            labels[top:bottom, left:right] = cls

    image = _render(labels, style, spec.num_classes, appearance)
    return Sample(image=image, labels=labels, domain=domain, seed=int(seed), num_classes=spec.num_classes)
