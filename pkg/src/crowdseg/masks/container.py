"""The .lseg mask container: a small binary envelope around RLE layers.

Layout, all integers little-endian:

    magic "LSEG" | version u16 = 1 | width u32 | height u32 | layer count u16
    per layer, in canonical order:
        name length u16 | name bytes (UTF-8) | payload length u32 | RLE payload

Canonical layer order is ascending class display_order with ties broken
lexicographically by name; serialization is therefore deterministic.
"""

from __future__ import annotations

import struct
from typing import Mapping

from ..errors import MalformedContainer
from .model import MaskLayer, SegmentationMask
from .rle import encode_rle, decode_rle

LSEG_MAGIC = b"LSEG"
LSEG_VERSION = 1

_HEADER = struct.Struct("<HIIH")  # version, width, height, layer count
_NAME_LEN = struct.Struct("<H")
_PAYLOAD_LEN = struct.Struct("<I")


def canonical_order(names, class_order: Mapping[str, int] | None = None) -> list[str]:
    order = class_order or {}
    return sorted(names, key=lambda n: (order.get(n, 0), n))


def serialize_mask(mask: SegmentationMask, class_order: Mapping[str, int] | None = None) -> bytes:
    """Emit the container bytes for a mask.

    class_order maps layer names to display_order; unmapped names sort as 0,
    so with no map layers are ordered lexicographically.
    """
    parts = [LSEG_MAGIC, _HEADER.pack(LSEG_VERSION, mask.width, mask.height, len(mask.layers))]
    for name in canonical_order(mask.layers, class_order):
        name_bytes = name.encode("utf-8")
        payload = encode_rle(mask.layers[name])
        parts.append(_NAME_LEN.pack(len(name_bytes)))
        parts.append(name_bytes)
        parts.append(_PAYLOAD_LEN.pack(len(payload)))
        parts.append(payload)
    return b"".join(parts)


def deserialize_mask(data: bytes) -> SegmentationMask:
    """Parse container bytes; inverse of serialize_mask."""
    if len(data) < 4 or data[:4] != LSEG_MAGIC:
        raise MalformedContainer("bad magic")
    pos = 4
    if len(data) < pos + _HEADER.size:
        raise MalformedContainer("truncated header")
    version, width, height, layer_count = _HEADER.unpack_from(data, pos)
    pos += _HEADER.size
    if version != LSEG_VERSION:
        raise MalformedContainer(f"unsupported version {version}")
    if width < 1 or height < 1:
        raise MalformedContainer("dimensions must be >= 1")

    layers: dict[str, MaskLayer] = {}
    for _ in range(layer_count):
        if len(data) < pos + _NAME_LEN.size:
            raise MalformedContainer("truncated layer name length")
        (name_len,) = _NAME_LEN.unpack_from(data, pos)
        pos += _NAME_LEN.size
        if name_len == 0:
            raise MalformedContainer("empty layer name")
        if len(data) < pos + name_len:
            raise MalformedContainer("truncated layer name")
        try:
            name = data[pos:pos + name_len].decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedContainer("layer name is not valid UTF-8") from exc
        pos += name_len
        if name in layers:
            raise MalformedContainer(f"duplicate layer name {name!r}")
        if len(data) < pos + _PAYLOAD_LEN.size:
            raise MalformedContainer("truncated payload length")
        (payload_len,) = _PAYLOAD_LEN.unpack_from(data, pos)
        pos += _PAYLOAD_LEN.size
        if len(data) < pos + payload_len:
            raise MalformedContainer("truncated payload")
        layers[name] = decode_rle(data[pos:pos + payload_len], width, height)
        pos += payload_len

    if pos != len(data):
        raise MalformedContainer(f"{len(data) - pos} trailing bytes after last layer")
    return SegmentationMask(width=width, height=height, layers=layers)
