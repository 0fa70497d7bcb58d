"""Brush stroke rasterization: the server-side reference for the client pencil.

A pixel (integer center) is set iff its Euclidean distance to the stroke
polyline is <= radius. Comparisons use squared distances so results are
bit-reproducible across languages; the browser client implements the same
arithmetic.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from ..errors import EmptyPolyline
from .model import MaskLayer


def rasterize_stroke(
    points: Sequence[tuple[float, float]],
    radius: float,
    width: int,
    height: int,
) -> MaskLayer:
    """Rasterize a polyline with a round brush onto a fresh layer.

    A single point rasterizes as a disc; pixels outside the raster clip.
    """
    if len(points) == 0:
        raise EmptyPolyline("stroke needs at least one point")
    if radius < 0:
        raise ValueError("radius must be >= 0")

    layer = MaskLayer.zeros(width, height)
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    x_lo = max(0, math.floor(min(xs) - radius))
    x_hi = min(width - 1, math.ceil(max(xs) + radius))
    y_lo = max(0, math.floor(min(ys) - radius))
    y_hi = min(height - 1, math.ceil(max(ys) + radius))
    if x_lo > x_hi or y_lo > y_hi:
        return layer

    px, py = np.meshgrid(
        np.arange(x_lo, x_hi + 1, dtype=np.float64),
        np.arange(y_lo, y_hi + 1, dtype=np.float64))
    best = np.full(px.shape, np.inf)

    segments = list(zip(points, points[1:])) if len(points) > 1 else [(points[0], points[0])]
    for (ax, ay), (bx, by) in segments:
        dx = bx - ax
        dy = by - ay
        seg_len2 = dx * dx + dy * dy
        if seg_len2 == 0.0:
            ex = px - ax
            ey = py - ay
        else:
            t = ((px - ax) * dx + (py - ay) * dy) / seg_len2
            t = np.clip(t, 0.0, 1.0)
            ex = px - (ax + t * dx)
            ey = py - (ay + t * dy)
        d2 = ex * ex + ey * ey
        np.minimum(best, d2, out=best)

    hit = best <= radius * radius
    layer.bits[y_lo:y_hi + 1, x_lo:x_hi + 1] = hit
    return layer
