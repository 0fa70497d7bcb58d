"""Regenerate tests/fixtures/parity.json from the server-side codecs.

Run from the repo root with the backend package installed:

    python3 frontend/tools/gen_fixtures.py

The client test suite replays these vectors through the TypeScript
implementations and asserts byte identity.
"""

import base64
import json
from pathlib import Path

import numpy as np

from crowdseg.masks import (
    MaskLayer,
    SegmentationMask,
    encode_rle,
    rasterize_stroke,
    serialize_mask,
)

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "parity.json"


def b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def rle_vectors():
    rng = np.random.default_rng(31415)
    cases = [
        ("all-zero", np.zeros((3, 4), dtype=bool)),
        ("all-one", np.ones((2, 2), dtype=bool)),
        ("checker", np.indices((5, 5)).sum(axis=0) % 2 == 0),
    ]
    for i in range(4):
        cases.append((f"random-{i}", rng.random((7, 9)) < rng.random()))
    out = []
    for name, bits in cases:
        layer = MaskLayer(bits)
        out.append({
            "name": name,
            "width": layer.width,
            "height": layer.height,
            "bits": "".join("1" if b else "0" for b in bits.ravel()),
            "payload_b64": b64(encode_rle(layer)),
        })
    return out


def container_vectors():
    rng = np.random.default_rng(2718)
    out = []

    empty = SegmentationMask(6, 4, {})
    out.append({
        "name": "no-layers",
        "width": 6, "height": 4, "layers": {}, "class_order": {},
        "lseg_b64": b64(serialize_mask(empty)),
    })

    bits_a = rng.random((8, 10)) < 0.4
    bits_v = rng.random((8, 10)) < 0.3
    mask = SegmentationMask(10, 8, {
        "venule": MaskLayer(bits_v), "arteriole": MaskLayer(bits_a)})
    order = {"arteriole": 0, "venule": 1}
    out.append({
        "name": "two-classes",
        "width": 10, "height": 8,
        "layers": {
            "arteriole": "".join("1" if b else "0" for b in bits_a.ravel()),
            "venule": "".join("1" if b else "0" for b in bits_v.ravel()),
        },
        "class_order": order,
        "lseg_b64": b64(serialize_mask(mask, order)),
    })

    flipped = {"arteriole": 1, "venule": 0}
    out.append({
        "name": "flipped-order",
        "width": 10, "height": 8,
        "layers": out[-1]["layers"],
        "class_order": flipped,
        "lseg_b64": b64(serialize_mask(mask, flipped)),
    })
    return out


STROKE_SCRIPTS = [
    {
        "name": "single-dots",
        "width": 16, "height": 16,
        "classes": [{"name": "arteriole", "displayOrder": 0},
                    {"name": "venule", "displayOrder": 1}],
        "strokes": [
            {"class": "arteriole", "points": [[5.0, 5.0]], "radius": 0.0, "erase": False},
            {"class": "arteriole", "points": [[10.0, 3.0]], "radius": 1.0, "erase": False},
            {"class": "venule", "points": [[8.0, 8.0]], "radius": 2.5, "erase": False},
        ],
    },
    {
        "name": "lines-and-erase",
        "width": 32, "height": 24,
        "classes": [{"name": "arteriole", "displayOrder": 0},
                    {"name": "venule", "displayOrder": 1}],
        "strokes": [
            {"class": "arteriole", "points": [[2.0, 2.0], [29.0, 2.0]],
             "radius": 1.5, "erase": False},
            {"class": "arteriole", "points": [[4.25, 1.75], [10.5, 2.25]],
             "radius": 1.0, "erase": True},
            {"class": "venule", "points": [[3.0, 20.0], [15.5, 10.25], [28.0, 21.0]],
             "radius": 2.0, "erase": False},
        ],
    },
    {
        "name": "irregular-floats",
        "width": 25, "height": 25,
        "classes": [{"name": "vessel", "displayOrder": 0}],
        "strokes": [
            {"class": "vessel", "points": [[0.3, 7.77], [19.93, 11.08]],
             "radius": 3.3, "erase": False},
            {"class": "vessel", "points": [[12.1, 3.9], [12.1, 22.6]],
             "radius": 1.7, "erase": False},
            {"class": "vessel", "points": [[11.0, 10.0], [13.2, 12.4]],
             "radius": 0.9, "erase": True},
            {"class": "vessel", "points": [[-3.0, -3.0], [2.2, 1.1]],
             "radius": 2.0, "erase": False},
        ],
    },
    {
        "name": "out-of-raster-clip",
        "width": 12, "height": 10,
        "classes": [{"name": "vessel", "displayOrder": 0}],
        "strokes": [
            {"class": "vessel", "points": [[-5.0, 5.0], [16.0, 5.0]],
             "radius": 1.0, "erase": False},
            {"class": "vessel", "points": [[50.0, 50.0]], "radius": 3.0, "erase": False},
        ],
    },
]


def apply_script(script):
    width, height = script["width"], script["height"]
    layers = {c["name"]: MaskLayer.zeros(width, height) for c in script["classes"]}
    for stroke in script["strokes"]:
        pts = [tuple(p) for p in stroke["points"]]
        stamp = rasterize_stroke(pts, stroke["radius"], width, height)
        layer = layers[stroke["class"]]
        if stroke["erase"]:
            layer.bits &= ~stamp.bits
        else:
            layer.bits |= stamp.bits
    mask = SegmentationMask(width, height, layers)
    order = {c["name"]: c["displayOrder"] for c in script["classes"]}
    return serialize_mask(mask, order)


def stroke_vectors():
    out = []
    for script in STROKE_SCRIPTS:
        expected = apply_script(script)
        out.append({**script, "lseg_b64": b64(expected)})
    return out


def main():
    OUT.parent.mkdir(parents=True, exist_ok=True)
    fixtures = {
        "rle": rle_vectors(),
        "containers": container_vectors(),
        "strokes": stroke_vectors(),
    }
    OUT.write_text(json.dumps(fixtures, indent=2) + "\n")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
