from .image import GrayImage, ProbabilityMap, gray_from_png, png_info
from .filters import gaussian_smooth, hessian_eigen
from .vesselness import VesselnessParams, vesselness, presegment
from .contrast import enhance_contrast, enhance_contrast_rgb
from .quality import QualityReport, quality_score
from .providers import (
    get_preseg_provider,
    get_quality_provider,
    register_preseg_provider,
    register_quality_provider,
)

__all__ = [
    "GrayImage",
    "ProbabilityMap",
    "gray_from_png",
    "png_info",
    "gaussian_smooth",
    "hessian_eigen",
    "VesselnessParams",
    "vesselness",
    "presegment",
    "enhance_contrast",
    "enhance_contrast_rgb",
    "QualityReport",
    "quality_score",
    "get_preseg_provider",
    "get_quality_provider",
    "register_preseg_provider",
    "register_quality_provider",
]
