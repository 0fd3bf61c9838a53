"""
Binary sample and map files, and dataset directories.

Sample file (``.udas``, little-endian)::

    magic   6 bytes  b"UDAS1\\n"
    domain  u8       0 = source, 1 = target
    seed    u64
    H, W    u32, u32
    |C|     u32
    image   H*W*3 float32, row-major, channel-last
    labels  H*W u8, row-major (255 = void)

Map file (``.udam``) shares the header layout with magic b"UDAM1\\n"; the u8
holds the map kind, the u32 after W the channel count, and the body is
H*W*channels float32 channel-last with no label block. The mask command reads
probability and confidence maps in this layout and writes masks and weight
maps back in it.

A dataset is a directory of ``<domain>_<index:05d>.udas`` files plus a
``meta.json`` holding the SceneSpec, the domain, the split name and the count.
"""

import json
import struct
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
import structlog

from src.errors import DatasetError, FormatError
from src.toyscenes.spec import VOID_LABEL, Domain, Sample, SceneSpec

logger = structlog.get_logger(__name__)

SAMPLE_MAGIC = b"UDAS1\n"
MAP_MAGIC = b"UDAM1\n"
SAMPLE_SUFFIX = ".udas"
MAP_SUFFIX = ".udam"
META_FILE = "meta.json"

_HEADER = struct.Struct("<6sBQIII")

PathLike = Union[str, Path]


class MapKind(IntEnum):
    PROBABILITY = 0
    CONFIDENCE = 1
    MASK = 2
    WEIGHTS = 3


@dataclass(frozen=True, eq=False)
class MapFile:
    values: np.ndarray  # float64 [channels, H, W]
    kind: MapKind
    seed: int = 0


@dataclass(frozen=True, eq=False)
class Dataset:
    spec: SceneSpec
    domain: Domain
    split: str
    samples: List[Sample]

    def __len__(self) -> int:
        return len(self.samples)


def _unpack_header(blob: bytes, magic: bytes, path: Path):
    if len(blob) < _HEADER.size:
        raise FormatError(f"{path}: truncated header ({len(blob)} of {_HEADER.size} bytes)")
    got, tag, seed, h, w, channels = _HEADER.unpack_from(blob)
    if got != magic:
        raise FormatError(f"{path}: bad magic {got!r}, expected {magic!r}")
    return tag, seed, h, w, channels


def write_sample(sample: Sample, path: PathLike) -> None:
    path = Path(path)
    h, w = sample.height, sample.width
    if sample.labels is None:
        raise FormatError(f"{path}: cannot write a sample whose labels were stripped")
    header = _HEADER.pack(SAMPLE_MAGIC, int(sample.domain), sample.seed, h, w, sample.num_classes)
    image = np.ascontiguousarray(sample.image.transpose(1, 2, 0), dtype="<f4").tobytes()
    labels = np.ascontiguousarray(sample.labels, dtype=np.uint8).tobytes()
    path.write_bytes(header + image + labels)


def read_sample(path: PathLike, with_labels: bool = True) -> Sample:
    """
    Read one sample file.

    With ``with_labels=False`` the label block is neither decoded nor checked,
    only its length; the returned sample has ``labels=None``.

    Raises:
        FormatError: On bad magic, truncation, trailing bytes or invalid values.
    """
    path = Path(path)
    blob = path.read_bytes()
    tag, seed, h, w, num_classes = _unpack_header(blob, SAMPLE_MAGIC, path)
    if tag not in (Domain.SOURCE, Domain.TARGET):
        raise FormatError(f"{path}: unknown domain byte {tag}")
    if not 2 <= num_classes < VOID_LABEL:
        raise FormatError(f"{path}: class count {num_classes} out of range")

    image_bytes = h * w * 3 * 4
    expected = _HEADER.size + image_bytes + h * w
    if len(blob) < expected:
        raise FormatError(f"{path}: truncated body ({len(blob)} of {expected} bytes)")
    if len(blob) > expected:
        raise FormatError(f"{path}: {len(blob) - expected} unexpected trailing bytes")

    image = np.frombuffer(blob, dtype="<f4", count=h * w * 3, offset=_HEADER.size)
    image = image.reshape(h, w, 3).transpose(2, 0, 1).astype(np.float32)
    if not np.all(np.isfinite(image)) or image.min(initial=0.0) < 0.0 or image.max(initial=0.0) > 1.0:
        raise FormatError(f"{path}: image values must be finite and inside [0, 1]")

    labels: Optional[np.ndarray] = None
    if with_labels:
        labels = np.frombuffer(blob, dtype=np.uint8, count=h * w, offset=_HEADER.size + image_bytes)
        labels = labels.reshape(h, w).copy()
        bad = (labels != VOID_LABEL) & (labels >= num_classes)
        if np.any(bad):
            raise FormatError(f"{path}: label {int(labels[bad][0])} out of range for {num_classes} classes")

    return Sample(image=image, labels=labels, domain=Domain(tag), seed=int(seed), num_classes=int(num_classes))


def write_map(path: PathLike, values: np.ndarray, kind: MapKind, seed: int = 0) -> None:
    """Write a ``[channels, H, W]`` map as float32."""
    values = np.asarray(values)
    if values.ndim != 3:
        raise FormatError(f"{path}: map must be [channels, H, W], got shape {values.shape}")
    channels, h, w = values.shape
    header = _HEADER.pack(MAP_MAGIC, int(kind), seed, h, w, channels)
    body = np.ascontiguousarray(values.transpose(1, 2, 0), dtype="<f4").tobytes()
    Path(path).write_bytes(header + body)


def read_map(path: PathLike) -> MapFile:
    path = Path(path)
    blob = path.read_bytes()
    tag, seed, h, w, channels = _unpack_header(blob, MAP_MAGIC, path)
    try:
        kind = MapKind(tag)
    except ValueError as e:
        raise FormatError(f"{path}: unknown map kind {tag}") from e
    if channels < 1:
        raise FormatError(f"{path}: map has no channels")
    expected = _HEADER.size + h * w * channels * 4
    if len(blob) != expected:
        raise FormatError(f"{path}: body is {len(blob) - _HEADER.size} bytes, expected {expected - _HEADER.size}")
    values = np.frombuffer(blob, dtype="<f4", offset=_HEADER.size).reshape(h, w, channels)
    values = values.transpose(2, 0, 1).astype(np.float64)
    if not np.all(np.isfinite(values)):
        raise FormatError(f"{path}: map holds non-finite values")
    return MapFile(values=values, kind=kind, seed=int(seed))


def sample_filename(domain: Domain, index: int) -> str:
    return f"{domain.label}_{index:05d}{SAMPLE_SUFFIX}"


def write_dataset(
    directory: PathLike,
    samples: Sequence[Sample],
    spec: SceneSpec,
    domain: Domain,
    split: str,
) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for index, sample in enumerate(samples):
        if sample.domain != domain:
            raise DatasetError(f"split {split!r} is {domain.label} but sample {index} is {sample.domain.label}")
        write_sample(sample, directory / sample_filename(domain, index))
    meta = {"scene": spec.model_dump(mode="json"), "domain": domain.label, "split": split, "count": len(samples)}
    (directory / META_FILE).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info("Dataset written", directory=str(directory), split=split, count=len(samples))
    return directory


def read_meta(directory: PathLike) -> dict:
    directory = Path(directory)
    meta_path = directory / META_FILE
    if not meta_path.is_file():
        raise DatasetError(f"{directory}: not a dataset directory (missing {META_FILE})")
    try:
        return json.loads(meta_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise DatasetError(f"{meta_path}: invalid JSON ({e})") from e


def load_dataset(directory: PathLike, with_labels: bool = True) -> Dataset:
    """
    Load every sample of a dataset directory in file-name order.

    Raises:
        DatasetError: If meta.json is missing or disagrees with the files.
    """
    directory = Path(directory)
    meta = read_meta(directory)
    try:
        spec = SceneSpec.model_validate(meta["scene"])
        domain = Domain.parse(meta["domain"])
    except (KeyError, ValueError) as e:
        raise DatasetError(f"{directory}: invalid {META_FILE} ({e})") from e

    files = sorted(directory.glob(f"*{SAMPLE_SUFFIX}"))
    samples = [read_sample(f, with_labels=with_labels) for f in files]
    if len(samples) != meta.get("count", len(samples)):
        raise DatasetError(f"{directory}: {META_FILE} lists {meta['count']} samples, found {len(samples)}")
    for f, sample in zip(files, samples):
        if sample.domain != domain:
            raise DatasetError(f"{f}: {sample.domain.label} sample in a {domain.label} dataset")
        if (sample.height, sample.width, sample.num_classes) != (spec.height, spec.width, spec.num_classes):
            raise DatasetError(f"{f}: sample geometry does not match {META_FILE}")

    logger.info(
        "Dataset loaded",
        directory=str(directory),
        domain=domain.label,
        count=len(samples),
        with_labels=with_labels,
    )
    return Dataset(spec=spec, domain=domain, split=str(meta.get("split", domain.label)), samples=samples)
