"""Run-length codec for binary mask layers.

A payload is a sequence of u32 little-endian run lengths, alternating
zero-runs and one-runs and starting with a zero-run. The leading zero-run
may have length 0 (layer starts with ones); no other zero-length run is
ever emitted. Runs always sum to width * height.
"""

from __future__ import annotations

import numpy as np

from ..errors import MalformedRle
from .model import MaskLayer


def encode_rle(layer: MaskLayer) -> bytes:
    """Encode a layer into the alternating run-length payload."""
    flat = layer.bits.ravel()
    n = flat.size
    boundaries = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    edges = np.concatenate(([0], boundaries, [n]))
    runs = np.diff(edges)
    if flat[0]:
        runs = np.concatenate(([0], runs))
    return runs.astype("<u4").tobytes()


def decode_rle(data: bytes, width: int, height: int) -> MaskLayer:
    """Decode a run-length payload back into a layer.

    Raises MalformedRle if the byte count is not a multiple of 4 or the
    runs do not sum to width * height.
    """
    if len(data) % 4 != 0:
        raise MalformedRle(f"payload length {len(data)} is not a multiple of 4")
    runs = np.frombuffer(data, dtype="<u4").astype(np.int64)
    total = int(runs.sum())
    if total != width * height:
        raise MalformedRle(f"runs sum to {total}, expected {width * height}")
    values = (np.arange(runs.size) % 2).astype(bool)
    bits = np.repeat(values, runs).reshape(height, width)
    return MaskLayer(bits)
