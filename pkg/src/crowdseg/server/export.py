"""Dataset export: a tar archive with images, chosen masks, per-class
renders and a deterministic audit manifest.

Layout:
    images/<image_id>.png
    segmentations/<image_id>/v<NNN>_<annotator_id>.lseg
    renders/<image_id>/<class>.png          (0/255 per layer of the chosen version)
    manifest.json                           (full history with review flags)

For selector "all" the chosen version is the head; for "reviewed-only"
it is the latest version that is either approved or a senior correction,
and images without one are excluded. Member bytes are deterministic so
incremental pulls can skip unchanged files.
"""

from __future__ import annotations

import io
import json
import tarfile

import numpy as np
from PIL import Image

from ..masks import deserialize_mask
from ..store.core import VersionEntry, VersionStore

SELECTORS = ("all", "reviewed-only")


def choose_version(entries: list[VersionEntry], selector: str) -> VersionEntry | None:
    if not entries:
        return None
    if selector == "all":
        return entries[-1]
    for entry in reversed(entries):
        if entry.review == "approved" or entry.kind == "correction":
            return entry
    return None


def _render_layers(lseg_bytes: bytes) -> dict[str, bytes]:
    mask = deserialize_mask(lseg_bytes)
    renders = {}
    for name, layer in mask.layers.items():
        buf = io.BytesIO()
        array = (layer.bits.astype(np.uint8)) * 255
        Image.fromarray(array, mode="L").save(buf, format="PNG")
        renders[name] = buf.getvalue()
    return renders


def build_export(store: VersionStore, selector: str) -> bytes:
    """Assemble the archive in memory and return its bytes."""
    if selector not in SELECTORS:
        raise ValueError(f"selector must be one of {SELECTORS}")

    annotators = sorted(store.list_annotators(), key=lambda a: a.annotator_id)
    names = {a.annotator_id: a.display_name for a in annotators}
    manifest_images = []
    members: list[tuple[str, bytes]] = []

    for image in sorted(store.list_images(), key=lambda r: r.image_id):
        history = store.history(image.image_id)
        chosen = choose_version(history, selector)
        if selector == "reviewed-only" and chosen is None:
            continue
        members.append((f"images/{image.image_id}.png", store.get_blob(image.image_id)))
        if chosen is not None:
            lseg = store.get_blob(chosen.blob)
            members.append((
                f"segmentations/{image.image_id}/"
                f"v{chosen.version_no:03d}_{chosen.annotator_id}.lseg", lseg))
            for class_name, png in sorted(_render_layers(lseg).items()):
                members.append((f"renders/{image.image_id}/{class_name}.png", png))
        manifest_images.append({
            **image.to_payload(),
            "chosen_version": chosen.version_no if chosen else None,
            "versions": [
                {**entry.to_payload(),
                 "annotator_name": names.get(entry.annotator_id, "")}
                for entry in history],
        })

    manifest = {
        "selector": selector,
        "annotators": [a.public_payload() for a in annotators],
        "images": manifest_images,
    }
    members.append((
        "manifest.json",
        json.dumps(manifest, indent=2, sort_keys=True).encode("utf-8")))

    buf = io.BytesIO()
    with tarfile.open(fileobj=buf, mode="w") as tar:
        for name, data in members:
            info = tarfile.TarInfo(name=name)
            info.size = len(data)
            info.mtime = 0
            tar.addfile(info, io.BytesIO(data))
    return buf.getvalue()
