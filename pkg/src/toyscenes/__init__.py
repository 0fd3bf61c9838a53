"""Procedural source/target scenes, class statistics and the on-disk sample format."""

from src.toyscenes.generator import generate_scene
from src.toyscenes.spec import CLASS_NAMES, VOID_LABEL, Domain, DomainStyle, Sample, SceneSpec
from src.toyscenes.stats import ClassWeights, class_frequencies, one_hot
from src.toyscenes.storage import (
    Dataset,
    MapFile,
    MapKind,
    load_dataset,
    read_map,
    read_sample,
    write_dataset,
    write_map,
    write_sample,
)

__all__ = [
    "CLASS_NAMES",
    "VOID_LABEL",
    "ClassWeights",
    "Dataset",
    "Domain",
    "DomainStyle",
    "MapFile",
    "MapKind",
    "Sample",
    "SceneSpec",
    "class_frequencies",
    "generate_scene",
    "load_dataset",
    "one_hot",
    "read_map",
    "read_sample",
    "write_dataset",
    "write_map",
    "write_sample",
]
