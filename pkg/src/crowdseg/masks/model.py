"""Domain types for enrolled images and layered binary masks."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Mapping

import numpy as np

_HEX_DIGEST = re.compile(r"^[0-9a-f]{64}$")
_CLASS_NAME = re.compile(r"^[a-z][a-z0-9_]*$")

# Run lengths are encoded as u32, so a layer must fit in one run.
MAX_LAYER_CELLS = 2**32 - 1

ImageStatus = ("pending", "assigned", "segmented", "reviewed", "skipped")


@dataclass
class ImageRecord:
    """Metadata for one enrolled image. image_id is the SHA-256 of the file bytes."""

    image_id: str
    width: int
    height: int
    channels: int
    bit_depth: int
    source_name: str
    enrolled_at: str
    status: str = "pending"

    def __post_init__(self):
        if not _HEX_DIGEST.match(self.image_id):
            raise ValueError(f"image_id must be a 64-char lowercase hex digest: {self.image_id!r}")
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be >= 1")
        if self.channels not in (1, 3):
            raise ValueError("channels must be 1 or 3")
        if self.status not in ImageStatus:
            raise ValueError(f"unknown status {self.status!r}")

    def to_payload(self) -> dict:
        return {
            "image_id": self.image_id,
            "width": self.width,
            "height": self.height,
            "channels": self.channels,
            "bit_depth": self.bit_depth,
            "source_name": self.source_name,
            "enrolled_at": self.enrolled_at,
            "status": self.status,
        }

    @classmethod
    def from_payload(cls, d: Mapping) -> "ImageRecord":
        return cls(**{k: d[k] for k in (
            "image_id", "width", "height", "channels", "bit_depth",
            "source_name", "enrolled_at", "status")})


@dataclass(frozen=True)
class LabelClass:
    """One segmentation class the project annotates."""

    name: str
    display_order: int = 0
    default_opacity: float = 0.5

    def __post_init__(self):
        if not _CLASS_NAME.match(self.name):
            raise ValueError(f"invalid class name {self.name!r}")
        if not 0.0 <= self.default_opacity <= 1.0:
            raise ValueError("default_opacity must be in [0, 1]")


class MaskLayer:
    """Binary raster over a width x height grid, row-major."""

    __slots__ = ("bits",)

    def __init__(self, bits: np.ndarray):
        bits = np.asarray(bits, dtype=bool)
        if bits.ndim != 2:
            raise ValueError("layer bits must be a 2-D array")
        h, w = bits.shape
        if w < 1 or h < 1:
            raise ValueError("layer dimensions must be >= 1")
        if w * h > MAX_LAYER_CELLS:
            raise ValueError("layer too large for u32 run lengths")
        self.bits = bits

    @classmethod
    def zeros(cls, width: int, height: int) -> "MaskLayer":
        return cls(np.zeros((height, width), dtype=bool))

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def count(self) -> int:
        """Number of set pixels."""
        return int(np.count_nonzero(self.bits))

    def copy(self) -> "MaskLayer":
        return MaskLayer(self.bits.copy())

    def __eq__(self, other) -> bool:
        if not isinstance(other, MaskLayer):
            return NotImplemented
        return self.bits.shape == other.bits.shape and bool(np.array_equal(self.bits, other.bits))

    def __repr__(self) -> str:
        return f"MaskLayer({self.width}x{self.height}, {self.count} set)"


@dataclass
class SegmentationMask:
    """Named binary layers over one raster. Layers may overlap."""

    width: int
    height: int
    layers: dict[str, MaskLayer] = field(default_factory=dict)

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("mask dimensions must be >= 1")
        for name, layer in self.layers.items():
            self._check_layer(name, layer)

    def _check_layer(self, name: str, layer: MaskLayer):
        if not name:
            raise ValueError("layer name must be non-empty")
        if (layer.width, layer.height) != (self.width, self.height):
            raise ValueError(
                f"layer {name!r} is {layer.width}x{layer.height}, "
                f"mask is {self.width}x{self.height}")

    def add_layer(self, name: str, layer: MaskLayer) -> None:
        self._check_layer(name, layer)
        self.layers[name] = layer

    def layer_names(self) -> list[str]:
        return list(self.layers)

    def __iter__(self) -> Iterator[tuple[str, MaskLayer]]:
        return iter(self.layers.items())

    def __eq__(self, other) -> bool:
        if not isinstance(other, SegmentationMask):
            return NotImplemented
        return (
            (self.width, self.height) == (other.width, other.height)
            and set(self.layers) == set(other.layers)
            and all(self.layers[n] == other.layers[n] for n in self.layers)
        )


@dataclass(frozen=True)
class ClassAgreement:
    """Pairwise overlap stats for one class."""

    dice: float
    iou: float
    area_a: int
    area_b: int


@dataclass(frozen=True)
class AgreementReport:
    """Per-class dice/iou between two masks plus the unweighted dice mean."""

    per_class: dict[str, ClassAgreement]
    macro_dice: float

    def to_payload(self) -> dict:
        return {
            "per_class": {
                name: {"dice": c.dice, "iou": c.iou, "area_a": c.area_a, "area_b": c.area_b}
                for name, c in self.per_class.items()
            },
            "macro_dice": self.macro_dice,
        }
