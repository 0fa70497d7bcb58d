"""Researcher command line client.

Talks to the server's public HTTP endpoints only. The bearer token comes
from --token or the CROWDSEG_TOKEN environment variable, never from a
positional argument. Exit codes: 0 success, 1 operational error, 2 usage
error. With --json all machine output is line-oriented JSON.
"""

from __future__ import annotations

import hashlib
import io
import json
import tarfile
from itertools import combinations
from pathlib import Path

import click
import httpx

from .masks import MaskLayer, SegmentationMask, compare_masks, deserialize_mask

API = "/api/v1"


class Session:
    def __init__(self, server: str, token: str, as_json: bool, keep_going: bool):
        self.server = server.rstrip("/")
        self.as_json = as_json
        self.keep_going = keep_going
        self.client = httpx.Client(
            base_url=self.server + API,
            headers={"Authorization": f"Bearer {token}"} if token else {},
            timeout=120.0)

    def call(self, method: str, path: str, **kwargs) -> httpx.Response:
        try:
            resp = self.client.request(method, path, **kwargs)
        except httpx.HTTPError as exc:
            raise click.ClickException(f"cannot reach {self.server}: {exc}")
        if resp.status_code >= 400:
            try:
                body = resp.json()
                detail = f"{body.get('code', 'error')}: {body.get('message', '')}"
            except Exception:
                detail = resp.text[:200]
            raise click.ClickException(f"server returned {resp.status_code} ({detail})")
        return resp

    def emit(self, record: dict, human: str) -> None:
        click.echo(json.dumps(record) if self.as_json else human)


@click.group()
@click.option("--server", envvar="CROWDSEG_SERVER", default="http://127.0.0.1:8077",
              show_default=True, help="Server base URL.")
@click.option("--token", envvar="CROWDSEG_TOKEN", default="",
              help="Bearer token (or set CROWDSEG_TOKEN).")
@click.option("--json", "as_json", is_flag=True, help="Line-oriented JSON output.")
@click.option("--keep-going", is_flag=True, help="Continue past per-item errors.")
@click.pass_context
def main(ctx, server, token, as_json, keep_going):
    """Manage an image segmentation campaign from the command line."""
    ctx.obj = Session(server, token, as_json, keep_going)


@main.command()
@click.argument("directory", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.pass_obj
def push(session: Session, directory: Path):
    """Enroll every PNG in DIRECTORY."""
    files = sorted(directory.glob("*.png"))
    if not files:
        raise click.ClickException(f"no .png files in {directory}")
    failures = 0
    for path in files:
        try:
            resp = session.call(
                "POST", "/images", content=path.read_bytes(),
                headers={"X-Source-Name": path.name})
        except click.ClickException as exc:
            failures += 1
            session.emit({"file": str(path), "error": exc.message},
                         f"{path}  ERROR  {exc.message}")
            if not session.keep_going:
                raise
            continue
        body = resp.json()
        flag = "new" if body["created"] else "duplicate"
        session.emit(
            {"file": str(path), "image_id": body["image_id"], "created": body["created"]},
            f"{path}  {body['image_id']}  ({flag})")
    if failures:
        raise click.ClickException(f"{failures} file(s) failed")


@main.command()
@click.option("--selector", type=click.Choice(["all", "reviewed-only"]), default="all",
              show_default=True)
@click.argument("out_dir", type=click.Path(file_okay=False, path_type=Path))
@click.pass_obj
def pull(session: Session, selector: str, out_dir: Path):
    """Download the export archive into OUT_DIR, incrementally by digest."""
    resp = session.call("GET", "/export", params={"selector": selector})
    written = unchanged = 0
    with tarfile.open(fileobj=io.BytesIO(resp.content)) as tar:
        for member in tar.getmembers():
            if not member.isfile():
                continue
            data = tar.extractfile(member).read()
            target = out_dir / member.name
            if target.exists() and hashlib.sha256(target.read_bytes()).hexdigest() \
                    == hashlib.sha256(data).hexdigest():
                unchanged += 1
                if session.as_json:
                    session.emit({"path": member.name, "action": "unchanged"}, "")
                continue
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_bytes(data)
            written += 1
            session.emit({"path": member.name, "action": "written"},
                         f"wrote {target}")
    session.emit({"written": written, "unchanged": unchanged},
                 f"{written} written, {unchanged} unchanged -> {out_dir}")


def _full_history(session: Session, image_id: str) -> list[dict]:
    versions: list[dict] = []
    offset = 0
    while True:
        body = session.call(
            "GET", f"/images/{image_id}/segmentations",
            params={"offset": offset, "limit": 100}).json()
        versions.extend(body["versions"])
        offset += len(body["versions"])
        if offset >= body["total"] or not body["versions"]:
            return versions


def _discover_image_ids(session: Session) -> list[str]:
    resp = session.call("GET", "/export", params={"selector": "all"})
    with tarfile.open(fileobj=io.BytesIO(resp.content)) as tar:
        manifest = json.loads(tar.extractfile("manifest.json").read())
    return [image["image_id"] for image in manifest["images"]]


def _shared_layer_mask(mask: SegmentationMask, names: set[str]) -> SegmentationMask:
    return SegmentationMask(
        width=mask.width, height=mask.height,
        layers={n: mask.layers[n] for n in sorted(names)})


@main.command()
@click.argument("image_ids", nargs=-1)
@click.pass_obj
def stats(session: Session, image_ids: tuple[str, ...]):
    """Pairwise inter-annotator agreement for IMAGE_IDS (default: all)."""
    ids = list(image_ids) or _discover_image_ids(session)
    for image_id in sorted(ids):
        history = _full_history(session, image_id)
        latest_manual: dict[str, dict] = {}
        for version in history:
            if version["kind"] == "manual":
                latest_manual[version["annotator_id"]] = version
        if len(latest_manual) < 2:
            session.emit({"image_id": image_id, "agreement": "n/a"},
                         f"{image_id[:12]}  n/a (needs two annotators)")
            continue
        masks = {}
        for annotator_id, version in sorted(latest_manual.items()):
            blob = session.call(
                "GET", f"/segmentations/{image_id}/{version['version_no']}").content
            masks[annotator_id] = deserialize_mask(blob)
        for a, b in combinations(sorted(masks), 2):
            shared = set(masks[a].layers) & set(masks[b].layers)
            report = compare_masks(
                _shared_layer_mask(masks[a], shared),
                _shared_layer_mask(masks[b], shared))
            for class_name, agreement in sorted(report.per_class.items()):
                session.emit(
                    {"image_id": image_id, "pair": [a, b], "class": class_name,
                     "dice": agreement.dice, "iou": agreement.iou},
                    f"{image_id[:12]}  {a}/{b}  {class_name}  "
                    f"dice={agreement.dice:.4f}  iou={agreement.iou:.4f}")
            session.emit(
                {"image_id": image_id, "pair": [a, b],
                 "macro_dice": report.macro_dice},
                f"{image_id[:12]}  {a}/{b}  macro_dice={report.macro_dice:.4f}")


@main.command()
@click.option("--strategy", required=True, type=click.Choice(["random", "entropy", "margin"]))
@click.option("--k", required=True, type=int)
@click.option("--seed", type=int, default=None)
@click.option("--auto-assign", default="",
              help="Comma-separated annotator ids to round-robin assignments over.")
@click.pass_obj
def batch(session: Session, strategy: str, k: int, seed: int | None, auto_assign: str):
    """Request the next batch of images to annotate."""
    params = {"strategy": strategy, "k": k}
    if seed is not None:
        params["seed"] = seed
    body = session.call("GET", "/next-batch", params=params).json()
    image_ids = body["image_ids"]
    session.emit({"strategy": strategy, "image_ids": image_ids},
                 "\n".join(image_ids) if image_ids else "(empty pool)")
    if not auto_assign:
        return
    annotators = [a.strip() for a in auto_assign.split(",") if a.strip()]
    if not annotators:
        raise click.UsageError("--auto-assign needs at least one annotator id")
    failures = 0
    for index, image_id in enumerate(image_ids):
        annotator_id = annotators[index % len(annotators)]
        try:
            task = session.call(
                "POST", "/assignments",
                json={"image_id": image_id, "annotator_id": annotator_id}).json()
        except click.ClickException as exc:
            failures += 1
            session.emit({"image_id": image_id, "error": exc.message},
                         f"{image_id[:12]}  ERROR  {exc.message}")
            if not session.keep_going:
                raise
            continue
        session.emit(
            {"task_id": task["task_id"], "image_id": image_id,
             "annotator_id": annotator_id},
            f"assigned {image_id[:12]} -> {annotator_id} (task {task['task_id']})")
    if failures:
        raise click.ClickException(f"{failures} assignment(s) failed")


@main.command()
@click.argument("image_id")
@click.argument("version_no", type=int)
@click.pass_obj
def restore(session: Session, image_id: str, version_no: int):
    """Re-publish an older version as the new head."""
    entry = session.call("POST", f"/images/{image_id}/restore/{version_no}").json()
    session.emit(
        {"image_id": image_id, "restored_from": version_no,
         "version_no": entry["version_no"]},
        f"restored {image_id[:12]} v{version_no} -> v{entry['version_no']}")


@main.group()
def annotators():
    """Manage annotator accounts."""


@annotators.command("register")
@click.option("--name", required=True)
@click.option("--role", required=True, type=click.Choice(["annotator", "senior", "researcher"]))
@click.pass_obj
def annotators_register(session: Session, name: str, role: str):
    """Create an account; the token is printed exactly once."""
    body = session.call(
        "POST", "/annotators", json={"display_name": name, "role": role}).json()
    annotator = body["annotator"]
    session.emit(
        {"annotator_id": annotator["annotator_id"], "role": annotator["role"],
         "token": body["token"]},
        f"{annotator['annotator_id']}  {role}  token={body['token']}")


@annotators.command("list")
@click.pass_obj
def annotators_list(session: Session):
    body = session.call("GET", "/annotators").json()
    for annotator in body["annotators"]:
        session.emit(
            annotator,
            f"{annotator['annotator_id']}  {annotator['role']:10s}  "
            f"{annotator['display_name']}"
            + ("" if annotator["active"] else "  (inactive)"))


if __name__ == "__main__":
    main()
