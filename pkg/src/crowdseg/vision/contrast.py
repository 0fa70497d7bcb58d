"""Contrast-limited adaptive histogram equalization.

8x8 tile grid, 256-bin per-tile histograms, clip at 2.0x the uniform bin
height with the clipped excess spread evenly over all bins. Each tile's
cumulative mapping uses the bin midpoint and is rescaled to span [0, 1];
pixels blend the four surrounding tile mappings bilinearly. Images with
either dimension below 16 fall back to one global mapping (no tiling);
this is a documented fallback, not an error.
"""

from __future__ import annotations

import numpy as np

from .image import GrayImage

N_BINS = 256
N_TILES = 8
CLIP_FACTOR = 2.0
MIN_TILED_DIM = 16


def _bin_indices(values: np.ndarray) -> np.ndarray:
    return np.minimum((values * N_BINS).astype(np.int64), N_BINS - 1)


def _equalize_lut(hist: np.ndarray) -> np.ndarray:
    """Clipped, redistributed, midpoint-cumulative mapping for one histogram."""
    hist = hist.astype(np.float64)
    total = hist.sum()
    clip = CLIP_FACTOR * total / N_BINS
    excess = np.maximum(hist - clip, 0.0).sum()
    clipped = np.minimum(hist, clip) + excess / N_BINS
    cdf_excl = np.concatenate(([0.0], np.cumsum(clipped)[:-1]))
    mid = cdf_excl + 0.5 * clipped
    lo, hi = mid[0], mid[-1]
    return (mid - lo) / (hi - lo)


def _tile_edges(size: int) -> np.ndarray:
    return np.floor(np.arange(N_TILES + 1) * size / N_TILES).astype(np.int64)


def enhance_contrast(img: GrayImage) -> GrayImage:
    """Adaptive histogram equalization; output values stay in [0, 1]."""
    values = img.values
    h, w = values.shape
    bins = _bin_indices(values)

    if h < MIN_TILED_DIM or w < MIN_TILED_DIM:
        hist = np.bincount(bins.ravel(), minlength=N_BINS)
        lut = _equalize_lut(hist)
        return GrayImage(lut[bins])

    y_edges = _tile_edges(h)
    x_edges = _tile_edges(w)
    luts = np.empty((N_TILES, N_TILES, N_BINS))
    y_centers = np.empty(N_TILES)
    x_centers = np.empty(N_TILES)
    for i in range(N_TILES):
        y_lo, y_hi = y_edges[i], y_edges[i + 1]
        y_centers[i] = (y_lo + y_hi - 1) / 2.0
        for j in range(N_TILES):
            x_lo, x_hi = x_edges[j], x_edges[j + 1]
            x_centers[j] = (x_lo + x_hi - 1) / 2.0
            tile_bins = bins[y_lo:y_hi, x_lo:x_hi]
            hist = np.bincount(tile_bins.ravel(), minlength=N_BINS)
            luts[i, j] = _equalize_lut(hist)

    ys = np.arange(h, dtype=np.float64)
    xs = np.arange(w, dtype=np.float64)
    iy = np.clip(np.searchsorted(y_centers, ys, side="right") - 1, 0, N_TILES - 2)
    ix = np.clip(np.searchsorted(x_centers, xs, side="right") - 1, 0, N_TILES - 2)
    wy = np.clip((ys - y_centers[iy]) / (y_centers[iy + 1] - y_centers[iy]), 0.0, 1.0)
    wx = np.clip((xs - x_centers[ix]) / (x_centers[ix + 1] - x_centers[ix]), 0.0, 1.0)

    iy_col = iy[:, None]
    ix_row = ix[None, :]
    wy_col = wy[:, None]
    wx_row = wx[None, :]
    out = (
        (1 - wy_col) * (1 - wx_row) * luts[iy_col, ix_row, bins]
        + (1 - wy_col) * wx_row * luts[iy_col, ix_row + 1, bins]
        + wy_col * (1 - wx_row) * luts[iy_col + 1, ix_row, bins]
        + wy_col * wx_row * luts[iy_col + 1, ix_row + 1, bins]
    )
    return GrayImage(np.clip(out, 0.0, 1.0))


def enhance_contrast_rgb(rgb: np.ndarray) -> np.ndarray:
    """Apply enhancement to the Rec. 601 luma of an RGB array in [0, 1].

    Channels are rescaled by the per-pixel luma ratio and clamped to [0, 1].
    """
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError("expected an (h, w, 3) array")
    luma = 0.299 * rgb[:, :, 0] + 0.587 * rgb[:, :, 1] + 0.114 * rgb[:, :, 2]
    luma = np.clip(luma, 0.0, 1.0)
    enhanced = enhance_contrast(GrayImage(luma)).values
    ratio = np.where(luma > 0.0, enhanced / np.maximum(luma, 1e-12), 1.0)
    return np.clip(rgb * ratio[:, :, None], 0.0, 1.0)
