"""Inter-annotator agreement metrics over binary layers."""

from __future__ import annotations

import numpy as np

from ..errors import DimensionMismatch, LayerSetMismatch
from .model import AgreementReport, ClassAgreement, MaskLayer, SegmentationMask


def _check_dims(a: MaskLayer, b: MaskLayer) -> None:
    if a.bits.shape != b.bits.shape:
        raise DimensionMismatch(
            f"{a.width}x{a.height} vs {b.width}x{b.height}")


def dice(a: MaskLayer, b: MaskLayer) -> float:
    """2|A&B| / (|A|+|B|). Two empty layers agree perfectly (1.0)."""
    _check_dims(a, b)
    inter = int(np.count_nonzero(a.bits & b.bits))
    total = a.count + b.count
    if total == 0:
        return 1.0
    return 2.0 * inter / total


def iou(a: MaskLayer, b: MaskLayer) -> float:
    """Intersection over union. Two empty layers agree perfectly (1.0)."""
    _check_dims(a, b)
    inter = int(np.count_nonzero(a.bits & b.bits))
    union = int(np.count_nonzero(a.bits | b.bits))
    if union == 0:
        return 1.0
    return inter / union


def compare_masks(a: SegmentationMask, b: SegmentationMask) -> AgreementReport:
    """Per-class dice/iou plus the unweighted mean dice over classes."""
    if (a.width, a.height) != (b.width, b.height):
        raise DimensionMismatch(
            f"{a.width}x{a.height} vs {b.width}x{b.height}")
    if set(a.layers) != set(b.layers):
        raise LayerSetMismatch(
            f"{sorted(a.layers)} vs {sorted(b.layers)}")
    per_class = {}
    for name in sorted(a.layers):
        la, lb = a.layers[name], b.layers[name]
        per_class[name] = ClassAgreement(
            dice=dice(la, lb), iou=iou(la, lb),
            area_a=la.count, area_b=lb.count)
    if per_class:
        macro = sum(c.dice for c in per_class.values()) / len(per_class)
    else:
        macro = 1.0
    return AgreementReport(per_class=per_class, macro_dice=macro)
