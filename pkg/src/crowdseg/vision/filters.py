"""Separable Gaussian smoothing and per-pixel Hessian eigenvalues.

All border handling is reflect-101 (edge pixel not duplicated), matching
scipy's "mirror" mode.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.ndimage import correlate1d

from ..errors import NonPositiveSigma
from .image import GrayImage

_D1 = np.array([-0.5, 0.0, 0.5])   # f'(x) ~ (f(x+1) - f(x-1)) / 2
_D2 = np.array([1.0, -2.0, 1.0])   # f''(x) ~ f(x-1) - 2 f(x) + f(x+1)


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Sampled Gaussian, radius ceil(3*sigma), normalized to sum 1."""
    if sigma <= 0:
        raise NonPositiveSigma(f"sigma must be > 0, got {sigma}")
    radius = math.ceil(3.0 * sigma)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return kernel / kernel.sum()


def _smooth_values(values: np.ndarray, sigma: float) -> np.ndarray:
    kernel = gaussian_kernel(sigma)
    out = correlate1d(values, kernel, axis=0, mode="mirror")
    return correlate1d(out, kernel, axis=1, mode="mirror")


def gaussian_smooth(img: GrayImage, sigma: float) -> GrayImage:
    """Smooth with a normalized separable Gaussian."""
    out = _smooth_values(img.values, sigma)
    # normalized positive kernel keeps values inside the input range;
    # clip only to shave float round-off past the [0,1] bounds
    return GrayImage(np.clip(out, 0.0, 1.0))


def hessian_eigen(img: GrayImage, sigma: float) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues of the scale-normalized Hessian of the sigma-smoothed image.

    Second derivatives use central differences and are multiplied by
    sigma**2. Returns (lam1, lam2) with |lam1| <= |lam2| per pixel.
    """
    smoothed = _smooth_values(img.values, sigma)
    s2 = sigma * sigma
    ixx = correlate1d(smoothed, _D2, axis=1, mode="mirror") * s2
    iyy = correlate1d(smoothed, _D2, axis=0, mode="mirror") * s2
    ixy = correlate1d(
        correlate1d(smoothed, _D1, axis=1, mode="mirror"),
        _D1, axis=0, mode="mirror") * s2

    mean = 0.5 * (ixx + iyy)
    spread = np.sqrt((0.5 * (ixx - iyy)) ** 2 + ixy * ixy)
    e_hi = mean + spread
    e_lo = mean - spread
    hi_is_larger = np.abs(e_hi) >= np.abs(e_lo)
    lam2 = np.where(hi_is_larger, e_hi, e_lo)
    lam1 = np.where(hi_is_larger, e_lo, e_hi)
    return lam1, lam2
