"""
Checkpoint files (``.udac``, little-endian)::

    magic  6 bytes  b"UDAC1\\n"
    count  u32      number of named tensors
    then per tensor:
      name length u16, name bytes (utf-8), rank u32, rank x u32 dims,
      prod(dims) float64

Generator tensors are stored under ``generator.``, discriminator tensors
under ``discriminator.`` and the completed step count as the rank-0 tensor
``meta.step``.
"""

import struct
from pathlib import Path
from typing import Dict, Mapping, Optional, Tuple, Union

import numpy as np
import structlog

from src.errors import CheckpointError, FormatError
from src.nets.discriminator import DiscriminatorParams
from src.nets.generator import GeneratorParams

logger = structlog.get_logger(__name__)

MAGIC = b"UDAC1\n"
SUFFIX = ".udac"
GENERATOR_PREFIX = "generator."
DISCRIMINATOR_PREFIX = "discriminator."
STEP_KEY = "meta.step"
HEAD_WEIGHT = "decoder.head.weight"

PathLike = Union[str, Path]


def write_checkpoint(path: PathLike, tensors: Mapping[str, np.ndarray]) -> None:
    """Write named arrays in insertion order."""
    parts = [MAGIC, struct.pack("<I", len(tensors))]
    for name, value in tensors.items():
        encoded = name.encode("utf-8")
        if len(encoded) > 0xFFFF:
            raise FormatError(f"tensor name too long: {name[:40]}...")
        value = np.asarray(value, dtype="<f8")
        parts.append(struct.pack("<H", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack("<I", value.ndim))
        parts.append(struct.pack(f"<{value.ndim}I", *value.shape))
        parts.append(np.ascontiguousarray(value).tobytes())
    Path(path).write_bytes(b"".join(parts))


class _Cursor:
    def __init__(self, blob: bytes, path: Path):
        self.blob = blob
        self.path = path
        self.offset = 0

    def take(self, size: int, what: str) -> bytes:
        end = self.offset + size
        if end > len(self.blob):
            raise FormatError(f"{self.path}: truncated while reading {what}")
        chunk = self.blob[self.offset:end]
        self.offset = end
        return chunk

    def unpack(self, fmt: str, what: str) -> Tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def read_checkpoint(path: PathLike) -> Dict[str, np.ndarray]:
    """
    Read every named array of a checkpoint.

    Raises:
        CheckpointError: If the file does not exist.
        FormatError: On bad magic, truncation, duplicate names or trailing bytes.
    """
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"{path}: checkpoint not found")
    cursor = _Cursor(path.read_bytes(), path)
    magic = cursor.take(len(MAGIC), "magic")
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    (count,) = cursor.unpack("<I", "tensor count")

    tensors: Dict[str, np.ndarray] = {}
    for index in range(count):
        (name_len,) = cursor.unpack("<H", f"name length of tensor {index}")
        try:
            name = cursor.take(name_len, f"name of tensor {index}").decode("utf-8")
        except UnicodeDecodeError as e:
            raise FormatError(f"{path}: tensor {index} has a non-utf-8 name") from e
        if name in tensors:
            raise FormatError(f"{path}: duplicate tensor {name!r}")
        (rank,) = cursor.unpack("<I", f"rank of {name}")
        if rank > 8:
            raise FormatError(f"{path}: tensor {name!r} has implausible rank {rank}")
        dims = cursor.unpack(f"<{rank}I", f"dims of {name}")
        size = int(np.prod(dims, dtype=np.int64))
        data = np.frombuffer(cursor.take(size * 8, f"data of {name}"), dtype="<f8")
        tensors[name] = data.reshape(dims).astype(np.float64)
    if cursor.offset != len(cursor.blob):
        raise FormatError(f"{path}: {len(cursor.blob) - cursor.offset} unexpected trailing bytes")
    return tensors


def build_state(
    generator: GeneratorParams,
    discriminator: Optional[DiscriminatorParams],
    step: int,
) -> Dict[str, np.ndarray]:
    state = generator.state_dict(prefix=GENERATOR_PREFIX)
    if discriminator is not None:
        state.update(discriminator.state_dict(prefix=DISCRIMINATOR_PREFIX))
    state[STEP_KEY] = np.asarray(float(step))
    return state


def save_checkpoint(
    path: PathLike,
    generator: GeneratorParams,
    discriminator: Optional[DiscriminatorParams],
    step: int,
) -> Path:
    path = Path(path)
    write_checkpoint(path, build_state(generator, discriminator, step))
    logger.info("Checkpoint written", path=str(path), step=step)
    return path


def checkpoint_num_classes(state: Mapping[str, np.ndarray], path: PathLike = "<memory>") -> int:
    key = GENERATOR_PREFIX + HEAD_WEIGHT
    if key not in state:
        raise CheckpointError(f"{path}: checkpoint holds no generator (missing {key!r})")
    return int(state[key].shape[0])


def load_generator(path: PathLike, num_classes: Optional[int] = None) -> Tuple[GeneratorParams, int]:
    """
    Rebuild the generator stored in a checkpoint.

    Args:
        path: Checkpoint file.
        num_classes: Expected class count; None accepts what the file holds.

    Returns:
        The generator and the stored step count.

    Raises:
        CheckpointError: If the class count or any tensor shape disagrees.
    """
    state = read_checkpoint(path)
    stored = checkpoint_num_classes(state, path)
    if num_classes is not None and stored != num_classes:
        raise CheckpointError(f"{path}: checkpoint predicts {stored} classes, dataset has {num_classes}")
    generator = GeneratorParams.initialize(stored, seed=0)
    generator.load_state_dict(state, prefix=GENERATOR_PREFIX)
    step = int(state[STEP_KEY]) if STEP_KEY in state else 0
    return generator, step


def load_discriminator(path: PathLike) -> DiscriminatorParams:
    state = read_checkpoint(path)
    discriminator = DiscriminatorParams.zeros(checkpoint_num_classes(state, path))
    discriminator.load_state_dict(state, prefix=DISCRIMINATOR_PREFIX)
    return discriminator
