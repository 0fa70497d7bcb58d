"""Pluggable pre-segmentation and quality providers.

A pre-segmentation provider maps (image bytes, class names) to a mask plus
a probability map; a quality provider maps image bytes to a QualityReport.
The built-in deterministic baselines are registered as "frangi-v1" and
"heuristic-q1"; a learned model can be dropped in by registering another
implementation under a new name.
"""

from __future__ import annotations

from typing import Callable, Protocol, Sequence

from ..masks import MaskLayer, SegmentationMask
from .image import ProbabilityMap, gray_from_png
from .quality import QualityReport, quality_score
from .vesselness import VesselnessParams, vesselness

PresegResult = tuple[SegmentationMask, ProbabilityMap]


class PresegProvider(Protocol):
    name: str

    def presegment(self, image_bytes: bytes, class_names: Sequence[str]) -> PresegResult: ...


class QualityProvider(Protocol):
    name: str

    def assess(self, image_bytes: bytes) -> QualityReport: ...


class TubularityPreseg:
    """Classical multi-scale tubularity baseline; emits one "vessel" layer."""

    name = "frangi-v1"

    def __init__(self, params: VesselnessParams | None = None):
        self.params = params or VesselnessParams()

    def presegment(self, image_bytes: bytes, class_names: Sequence[str]) -> PresegResult:
        img = gray_from_png(image_bytes)
        pmap = vesselness(img, self.params)
        layer = MaskLayer(pmap.values >= self.params.threshold)
        mask = SegmentationMask(width=img.width, height=img.height, layers={"vessel": layer})
        return mask, pmap


class HeuristicQuality:
    """Deterministic surrogate for a learned 1-10 quality grader."""

    name = "heuristic-q1"

    def assess(self, image_bytes: bytes) -> QualityReport:
        return quality_score(gray_from_png(image_bytes))


_PRESEG: dict[str, Callable[[], PresegProvider]] = {"frangi-v1": TubularityPreseg}
_QUALITY: dict[str, Callable[[], QualityProvider]] = {"heuristic-q1": HeuristicQuality}


def register_preseg_provider(name: str, factory: Callable[[], PresegProvider]) -> None:
    _PRESEG[name] = factory


def register_quality_provider(name: str, factory: Callable[[], QualityProvider]) -> None:
    _QUALITY[name] = factory


def get_preseg_provider(name: str) -> PresegProvider:
    try:
        return _PRESEG[name]()
    except KeyError:
        raise ValueError(f"unknown pre-segmentation provider {name!r}") from None


def get_quality_provider(name: str) -> QualityProvider:
    try:
        return _QUALITY[name]()
    except KeyError:
        raise ValueError(f"unknown quality provider {name!r}") from None
