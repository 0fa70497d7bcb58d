"""Working image representations for the vision pipeline."""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image

_GRAY_MODES = {"1", "L", "I", "I;16", "F"}


def _validate_field(values: np.ndarray, what: str) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise ValueError(f"{what} must be 2-D")
    if values.shape[0] < 1 or values.shape[1] < 1:
        raise ValueError(f"{what} dimensions must be >= 1")
    if values.min() < 0.0 or values.max() > 1.0:
        raise ValueError(f"{what} values must lie in [0, 1]")
    return values


@dataclass
class GrayImage:
    """Row-major intensities in [0, 1], shape (height, width)."""

    values: np.ndarray

    def __post_init__(self):
        self.values = _validate_field(self.values, "image")

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


@dataclass
class ProbabilityMap:
    """Per-pixel scores in [0, 1], shape (height, width)."""

    values: np.ndarray

    def __post_init__(self):
        self.values = _validate_field(self.values, "probability map")

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


def gray_from_png(data: bytes) -> GrayImage:
    """Decode PNG bytes to a grayscale working image (8-bit luma, scaled)."""
    with Image.open(io.BytesIO(data)) as im:
        gray = im.convert("L")
        values = np.asarray(gray, dtype=np.float64) / 255.0
    return GrayImage(values)


def png_info(data: bytes) -> tuple[int, int, int]:
    """Return (width, height, channels) of a PNG; channels collapses to 1 or 3.

    Raises ValueError for anything that is not a decodable PNG.
    """
    try:
        with Image.open(io.BytesIO(data)) as im:
            if im.format != "PNG":
                raise ValueError(f"expected PNG, got {im.format}")
            im.verify()
        # verify() invalidates the handle; reopen for size/mode
        with Image.open(io.BytesIO(data)) as im:
            channels = 1 if im.mode in _GRAY_MODES else 3
            return im.width, im.height, channels
    except (OSError, SyntaxError) as exc:
        raise ValueError(f"undecodable PNG: {exc}") from exc
