"""Shared fixtures: synthetic PNGs and mask containers."""

import io

import numpy as np
from PIL import Image

from crowdseg.masks import MaskLayer, SegmentationMask, serialize_mask


def make_mask(width, height, seed=0, layers=("vessel",), density=0.3):
    rng = np.random.default_rng(seed)
    return SegmentationMask(
        width=width, height=height,
        layers={name: MaskLayer(rng.random((height, width)) < density)
                for name in layers})


def make_lseg(width, height, seed=0, layers=("vessel",), density=0.3):
    return serialize_mask(make_mask(width, height, seed, layers, density))


def make_png(width, height, seed=0, mode="RGB"):
    rng = np.random.default_rng(seed)
    if mode == "L":
        array = rng.integers(0, 256, size=(height, width), dtype=np.uint8)
    else:
        array = rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)
    buf = io.BytesIO()
    Image.fromarray(array, mode=mode).save(buf, format="PNG")
    return buf.getvalue()
