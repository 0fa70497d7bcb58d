from .model import (
    AgreementReport,
    ClassAgreement,
    ImageRecord,
    ImageStatus,
    LabelClass,
    MaskLayer,
    SegmentationMask,
)
from .rle import encode_rle, decode_rle
from .container import serialize_mask, deserialize_mask, LSEG_MAGIC, LSEG_VERSION
from .metrics import dice, iou, compare_masks
from .geometry import rasterize_stroke

__all__ = [
    "AgreementReport",
    "ClassAgreement",
    "ImageRecord",
    "ImageStatus",
    "LabelClass",
    "MaskLayer",
    "SegmentationMask",
    "encode_rle",
    "decode_rle",
    "serialize_mask",
    "deserialize_mask",
    "LSEG_MAGIC",
    "LSEG_VERSION",
    "dice",
    "iou",
    "compare_masks",
    "rasterize_stroke",
]
