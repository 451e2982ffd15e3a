"""Hyperspectral data model, ENVI/PGM file I/O, and synthetic scenes."""

from .cube import (
    INTERLEAVES,
    UNLABELED,
    HyperCube,
    LabelMask,
    flatten,
    nm_to_band,
    unflatten,
)
from .envi import (
    DATA_TYPES,
    EnviFormatError,
    EnviHeader,
    format_envi_header,
    parse_envi_header,
    read_envi,
    read_label_mask,
    write_envi,
    write_label_mask_envi,
    write_label_mask_pgm,
)
from .synth import BlobSpec, ClassSpec, SceneSpec, ShadowSpec, synth_scene

__all__ = [
    "INTERLEAVES",
    "UNLABELED",
    "HyperCube",
    "LabelMask",
    "flatten",
    "unflatten",
    "nm_to_band",
    "EnviFormatError",
    "EnviHeader",
    "DATA_TYPES",
    "parse_envi_header",
    "format_envi_header",
    "read_envi",
    "write_envi",
    "read_label_mask",
    "write_label_mask_envi",
    "write_label_mask_pgm",
    "BlobSpec",
    "ClassSpec",
    "SceneSpec",
    "ShadowSpec",
    "synth_scene",
]
