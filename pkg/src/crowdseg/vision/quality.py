"""Heuristic image quality grading on a 1-10 scale.

Components:
  sharpness  min(var(Laplacian of the image scaled to [0, 255]) / 100, 1)
  contrast   min(RMS contrast / 0.5, 1)
  exposure   fraction of 32 equal-width histogram bins holding >= 0.1% of pixels
Grade is clamp(1 + 9 * (0.4 sharpness + 0.4 contrast + 0.2 exposure), 1, 10).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

from .image import GrayImage

_D2 = np.array([1.0, -2.0, 1.0])
EXPOSURE_BINS = 32
EXPOSURE_MIN_FRACTION = 0.001


@dataclass(frozen=True)
class QualityReport:
    grade: float
    sharpness: float
    contrast: float
    exposure: float

    def to_payload(self) -> dict:
        return {
            "grade": self.grade,
            "sharpness": self.sharpness,
            "contrast": self.contrast,
            "exposure": self.exposure,
        }


def combine_grade(sharpness: float, contrast: float, exposure: float) -> float:
    raw = 1.0 + 9.0 * (0.4 * sharpness + 0.4 * contrast + 0.2 * exposure)
    return float(min(max(raw, 1.0), 10.0))


def quality_score(img: GrayImage) -> QualityReport:
    values = img.values
    scaled = values * 255.0
    laplacian = (correlate1d(scaled, _D2, axis=0, mode="mirror")
                 + correlate1d(scaled, _D2, axis=1, mode="mirror"))
    sharpness = float(min(laplacian.var() / 100.0, 1.0))

    contrast = float(min(values.std() / 0.5, 1.0))

    bins = np.minimum((values * EXPOSURE_BINS).astype(np.int64), EXPOSURE_BINS - 1)
    counts = np.bincount(bins.ravel(), minlength=EXPOSURE_BINS)
    occupied = counts >= EXPOSURE_MIN_FRACTION * values.size
    exposure = float(occupied.sum() / EXPOSURE_BINS)

    return QualityReport(
        grade=combine_grade(sharpness, contrast, exposure),
        sharpness=sharpness,
        contrast=contrast,
        exposure=exposure,
    )
