"""Multi-scale tubularity filter used as the deterministic pre-segmenter.

Per scale, eigenvalues (lam1, lam2) of the scale-normalized Hessian give a
blobness ratio R = lam1/lam2 and structureness S = sqrt(lam1^2 + lam2^2).
The response is exp(-R^2 / 2 beta^2) * (1 - exp(-S^2 / 2 c^2)) where
lam2 <= 0 and zero elsewhere; c is half the maximum S over the image at
that scale. The final map is the pixelwise maximum over scales.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..masks import MaskLayer, SegmentationMask
from .filters import hessian_eigen
from .image import GrayImage, ProbabilityMap

_POLARITIES = ("dark-on-bright", "bright-on-dark")


@dataclass
class VesselnessParams:
    scales: tuple[float, ...] = (1.0, 2.0, 3.0, 4.0)
    beta: float = 0.5
    gamma_mode: str = "half-max-hessian-norm"
    polarity: str = "dark-on-bright"
    threshold: float = 0.15

    def __post_init__(self):
        self.scales = tuple(float(s) for s in self.scales)
        if not self.scales or any(s <= 0 for s in self.scales):
            raise ValueError("scales must be non-empty and positive")
        if self.beta <= 0:
            raise ValueError("beta must be > 0")
        if self.gamma_mode != "half-max-hessian-norm":
            raise ValueError(f"unknown gamma_mode {self.gamma_mode!r}")
        if self.polarity not in _POLARITIES:
            raise ValueError(f"polarity must be one of {_POLARITIES}")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must be in (0, 1)")


def vesselness(img: GrayImage, params: VesselnessParams = VesselnessParams()) -> ProbabilityMap:
    """Tubularity score per pixel, in [0, 1]."""
    if params.polarity == "dark-on-bright":
        work = GrayImage(1.0 - img.values)
    else:
        work = img

    beta2 = 2.0 * params.beta * params.beta
    out = np.zeros_like(img.values)
    for sigma in params.scales:
        lam1, lam2 = hessian_eigen(work, sigma)
        s2 = lam1 * lam1 + lam2 * lam2
        max_s = float(np.sqrt(s2.max()))
        c = max_s / 2.0 if max_s > 0.0 else 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio2 = np.where(lam2 != 0.0, (lam1 / lam2) ** 2, 0.0)
        response = np.exp(-ratio2 / beta2) * (1.0 - np.exp(-s2 / (2.0 * c * c)))
        response[lam2 > 0.0] = 0.0
        np.maximum(out, response, out=out)
    return ProbabilityMap(np.clip(out, 0.0, 1.0))


def presegment(img: GrayImage, params: VesselnessParams = VesselnessParams()) -> SegmentationMask:
    """Threshold the tubularity map into a single "vessel" layer."""
    pmap = vesselness(img, params)
    layer = MaskLayer(pmap.values >= params.threshold)
    return SegmentationMask(width=img.width, height=img.height, layers={"vessel": layer})
