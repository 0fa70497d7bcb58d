"""Versioned, append-only persistence for images, masks and workflow state.

Metadata mutations are journaled (one JSON record per logical operation,
flushed before the call returns); pixel data lives in the content-addressed
blob store. Replaying the journal reconstructs the exact pre-shutdown
state. History is never rewritten: restores and corrections append new
versions, and review marks are the only in-place field updates.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping

from ..errors import (
    AlreadyReviewed,
    DimensionMismatch,
    NoVersions,
    UnknownAnnotator,
    UnknownImage,
    UnknownVersion,
)
from ..masks import ImageRecord, deserialize_mask
from ..workflow.model import Annotator, Task
from .blobs import BlobRef, BlobStore, sha256_hex
from .journal import Journal, JournalRecord, read_journal, utc_now

VERSION_KINDS = ("manual", "presegmentation", "correction", "restore")
REVIEW_STATES = ("unreviewed", "approved", "corrected")


@dataclass
class VersionEntry:
    """One immutable step in an image's segmentation history."""

    image_id: str
    version_no: int
    blob: BlobRef
    annotator_id: str
    created_at: str
    kind: str
    restored_from: int | None = None
    review: str = "unreviewed"
    reviewer_id: str | None = None
    reviewed_at: str | None = None

    def __post_init__(self):
        if self.kind not in VERSION_KINDS:
            raise ValueError(f"unknown version kind {self.kind!r}")
        if self.review not in REVIEW_STATES:
            raise ValueError(f"unknown review state {self.review!r}")
        if self.kind == "restore":
            if self.restored_from is None or self.restored_from >= self.version_no:
                raise ValueError("restore entries need restored_from < version_no")

    def to_payload(self) -> dict:
        return {
            "image_id": self.image_id,
            "version_no": self.version_no,
            "blob": self.blob.to_payload(),
            "annotator_id": self.annotator_id,
            "created_at": self.created_at,
            "kind": self.kind,
            "restored_from": self.restored_from,
            "review": self.review,
            "reviewer_id": self.reviewer_id,
            "reviewed_at": self.reviewed_at,
        }

    @classmethod
    def from_payload(cls, d: Mapping) -> "VersionEntry":
        return cls(
            image_id=d["image_id"],
            version_no=d["version_no"],
            blob=BlobRef.from_payload(d["blob"]),
            annotator_id=d["annotator_id"],
            created_at=d["created_at"],
            kind=d["kind"],
            restored_from=d["restored_from"],
            review=d["review"],
            reviewer_id=d["reviewer_id"],
            reviewed_at=d["reviewed_at"],
        )


class VersionStore:
    """Journal-backed store; all mutations are serialized and durable."""

    def __init__(self, data_root: str | Path, fsync: bool = True):
        self.data_root = Path(data_root)
        self.data_root.mkdir(parents=True, exist_ok=True)
        self.blobs = BlobStore(self.data_root)
        self.journal_path = self.data_root / "journal.jsonl"

        self._lock = threading.RLock()
        self.images: dict[str, ImageRecord] = {}
        self.versions: dict[str, list[VersionEntry]] = {}
        self.annotators: dict[str, Annotator] = {}
        self.tasks: dict[str, Task] = {}
        self._tasks_by_image: dict[str, set[str]] = {}
        self._tasks_by_annotator: dict[str, set[str]] = {}

        records = read_journal(self.journal_path)
        for record in records:
            self._apply(record)
        last_seq = records[-1].seq if records else 0
        self.journal = Journal(self.journal_path, fsync=fsync, last_seq=last_seq)

    # -- replay ----------------------------------------------------------

    def _apply(self, record: JournalRecord) -> None:
        payload = record.payload
        if record.type == "image_enrolled":
            image = ImageRecord.from_payload(payload["image"])
            self.images[image.image_id] = image
            self.versions.setdefault(image.image_id, [])
        elif record.type == "version_appended":
            entry = VersionEntry.from_payload(payload["entry"])
            self.versions.setdefault(entry.image_id, []).append(entry)
            self._apply_side_effects(payload)
        elif record.type == "review_marked":
            entries = self.versions[payload["image_id"]]
            entry = entries[payload["version_no"] - 1]
            entry.review = payload["review"]
            entry.reviewer_id = payload["reviewer_id"]
            entry.reviewed_at = payload["reviewed_at"]
            correction = payload.get("correction")
            if correction is not None:
                entries.append(VersionEntry.from_payload(correction))
            self._apply_side_effects(payload)
        elif record.type == "annotator_registered":
            annotator = Annotator.from_payload(payload["annotator"])
            self.annotators[annotator.annotator_id] = annotator
        elif record.type == "task_event":
            self._apply_side_effects(payload)
        elif record.type == "snapshot":
            self._load_snapshot(payload)

    def _index_task(self, task: Task) -> None:
        self.tasks[task.task_id] = task
        self._tasks_by_image.setdefault(task.image_id, set()).add(task.task_id)
        self._tasks_by_annotator.setdefault(task.annotator_id, set()).add(task.task_id)

    def _apply_side_effects(self, payload: Mapping) -> None:
        task_payload = payload.get("task")
        if task_payload is not None:
            self._index_task(Task.from_payload(task_payload))
        status = payload.get("image_status")
        if status is not None:
            image_id = payload.get("image_id")
            if image_id and image_id in self.images:
                self.images[image_id].status = status

    def _load_snapshot(self, payload: Mapping) -> None:
        self.images = {
            d["image_id"]: ImageRecord.from_payload(d) for d in payload["images"]}
        self.versions = {
            image_id: [VersionEntry.from_payload(v) for v in entries]
            for image_id, entries in payload["versions"].items()}
        self.annotators = {
            d["annotator_id"]: Annotator.from_payload(d)
            for d in payload["annotators"]}
        self.tasks = {}
        self._tasks_by_image = {}
        self._tasks_by_annotator = {}
        for d in payload["tasks"]:
            self._index_task(Task.from_payload(d))

    # -- blobs -----------------------------------------------------------

    def put_blob(self, data: bytes) -> BlobRef:
        return self.blobs.put(data)

    def get_blob(self, ref: BlobRef | str) -> bytes:
        return self.blobs.get(ref)

    # -- images ----------------------------------------------------------

    def enroll_image(
        self,
        data: bytes,
        width: int,
        height: int,
        channels: int,
        source_name: str,
        bit_depth: int = 8,
    ) -> tuple[ImageRecord, bool]:
        """Store image bytes and journal the record. Idempotent by digest."""
        digest = sha256_hex(data)
        with self._lock:
            existing = self.images.get(digest)
            if existing is not None:
                return replace(existing), False
            self.blobs.put(data)
            image = ImageRecord(
                image_id=digest, width=width, height=height, channels=channels,
                bit_depth=bit_depth, source_name=source_name,
                enrolled_at=utc_now(), status="pending")
            self.journal.append("image_enrolled", {"image": image.to_payload()})
            self.images[digest] = image
            self.versions.setdefault(digest, [])
            return replace(image), True

    def image(self, image_id: str) -> ImageRecord:
        with self._lock:
            record = self.images.get(image_id)
            if record is None:
                raise UnknownImage(image_id)
            return replace(record)

    def list_images(self) -> list[ImageRecord]:
        with self._lock:
            return [replace(r) for r in self.images.values()]

    # -- versions ---------------------------------------------------------

    def _validate_version_blob(self, image: ImageRecord, blob: BlobRef) -> None:
        data = self.blobs.get(blob)   # raises UnknownBlob / CorruptBlob
        mask = deserialize_mask(data)
        if (mask.width, mask.height) != (image.width, image.height):
            raise DimensionMismatch(
                f"mask is {mask.width}x{mask.height}, "
                f"image is {image.width}x{image.height}")

    def append_version(
        self,
        image_id: str,
        blob: BlobRef,
        annotator_id: str,
        kind: str,
        restored_from: int | None = None,
        *,
        image_status: str | None = None,
        task: Task | None = None,
    ) -> VersionEntry:
        """Append the next version; optionally carries a task update and an
        image status change in the same journal record."""
        with self._lock:
            image = self.images.get(image_id)
            if image is None:
                raise UnknownImage(image_id)
            self._validate_version_blob(image, blob)
            entries = self.versions.setdefault(image_id, [])
            entry = VersionEntry(
                image_id=image_id, version_no=len(entries) + 1, blob=blob,
                annotator_id=annotator_id, created_at=utc_now(), kind=kind,
                restored_from=restored_from)
            payload = {
                "entry": entry.to_payload(),
                "image_id": image_id,
                "image_status": image_status,
                "task": task.to_payload() if task is not None else None,
            }
            self.journal.append("version_appended", payload)
            entries.append(entry)
            if task is not None:
                self._index_task(task)
            if image_status is not None:
                image.status = image_status
            return replace(entry)

    def history(self, image_id: str, offset: int = 0, limit: int | None = None) -> list[VersionEntry]:
        with self._lock:
            if image_id not in self.images:
                raise UnknownImage(image_id)
            entries = self.versions.get(image_id, [])
            end = offset + limit if limit is not None else None
            return [replace(e) for e in entries[offset:end]]

    def history_len(self, image_id: str) -> int:
        with self._lock:
            if image_id not in self.images:
                raise UnknownImage(image_id)
            return len(self.versions.get(image_id, []))

    def head(self, image_id: str) -> VersionEntry:
        with self._lock:
            if image_id not in self.images:
                raise UnknownImage(image_id)
            entries = self.versions.get(image_id, [])
            if not entries:
                raise NoVersions(image_id)
            return replace(entries[-1])

    def version(self, image_id: str, version_no: int) -> VersionEntry:
        with self._lock:
            if image_id not in self.images:
                raise UnknownImage(image_id)
            entries = self.versions.get(image_id, [])
            if not 1 <= version_no <= len(entries):
                raise UnknownVersion(f"{image_id} has no version {version_no}")
            return replace(entries[version_no - 1])

    def restore(self, image_id: str, version_no: int, actor_id: str) -> VersionEntry:
        """Append a new head that points at an older version's content."""
        with self._lock:
            source = self.version(image_id, version_no)
            return self.append_version(
                image_id, source.blob, actor_id, "restore",
                restored_from=version_no)

    def mark_review(
        self,
        image_id: str,
        version_no: int,
        reviewer_id: str,
        verdict: str,
        *,
        correction_blob: BlobRef | None = None,
        correction_annotator: str | None = None,
        task: Task | None = None,
        image_status: str | None = None,
    ) -> VersionEntry:
        """Set review fields once; a corrected verdict appends the senior's
        replacement mask as a new kind=correction version atomically."""
        if verdict not in ("approved", "corrected"):
            raise ValueError(f"verdict must be approved or corrected, got {verdict!r}")
        with self._lock:
            image = self.images.get(image_id)
            if image is None:
                raise UnknownImage(image_id)
            entries = self.versions.get(image_id, [])
            if not 1 <= version_no <= len(entries):
                raise UnknownVersion(f"{image_id} has no version {version_no}")
            entry = entries[version_no - 1]
            if entry.review != "unreviewed":
                raise AlreadyReviewed(f"{image_id} v{version_no} is {entry.review}")

            correction_entry = None
            if verdict == "corrected":
                if correction_blob is None:
                    raise ValueError("corrected verdict requires a correction blob")
                self._validate_version_blob(image, correction_blob)
                correction_entry = VersionEntry(
                    image_id=image_id, version_no=len(entries) + 1,
                    blob=correction_blob,
                    annotator_id=correction_annotator or reviewer_id,
                    created_at=utc_now(), kind="correction")

            reviewed_at = utc_now()
            payload = {
                "image_id": image_id,
                "version_no": version_no,
                "review": verdict,
                "reviewer_id": reviewer_id,
                "reviewed_at": reviewed_at,
                "correction": correction_entry.to_payload() if correction_entry else None,
                "task": task.to_payload() if task is not None else None,
                "image_status": image_status,
            }
            self.journal.append("review_marked", payload)
            entry.review = verdict
            entry.reviewer_id = reviewer_id
            entry.reviewed_at = reviewed_at
            if correction_entry is not None:
                entries.append(correction_entry)
            if task is not None:
                self._index_task(task)
            if image_status is not None:
                image.status = image_status
            return replace(entry)

    # -- annotators --------------------------------------------------------

    def register_annotator(self, annotator: Annotator) -> None:
        with self._lock:
            if annotator.annotator_id in self.annotators:
                raise ValueError(f"annotator {annotator.annotator_id} already registered")
            self.journal.append(
                "annotator_registered", {"annotator": annotator.to_payload()})
            self.annotators[annotator.annotator_id] = annotator

    def update_annotator(self, annotator: Annotator) -> None:
        with self._lock:
            if annotator.annotator_id not in self.annotators:
                raise UnknownAnnotator(annotator.annotator_id)
            self.journal.append(
                "annotator_registered", {"annotator": annotator.to_payload()})
            self.annotators[annotator.annotator_id] = annotator

    def annotator(self, annotator_id: str) -> Annotator:
        with self._lock:
            record = self.annotators.get(annotator_id)
            if record is None:
                raise UnknownAnnotator(annotator_id)
            return replace(record)

    def list_annotators(self) -> list[Annotator]:
        with self._lock:
            return [replace(a) for a in self.annotators.values()]

    # -- tasks -------------------------------------------------------------

    def record_task(self, task: Task, image_status: str | None = None) -> None:
        """Journal a task state change, optionally with an image status move."""
        with self._lock:
            payload = {
                "task": task.to_payload(),
                "image_id": task.image_id,
                "image_status": image_status,
            }
            self.journal.append("task_event", payload)
            self._index_task(task)
            if image_status is not None and task.image_id in self.images:
                self.images[task.image_id].status = image_status

    def task(self, task_id: str) -> Task | None:
        with self._lock:
            record = self.tasks.get(task_id)
            return replace(record) if record is not None else None

    def list_tasks(self) -> list[Task]:
        with self._lock:
            return [replace(t) for t in self.tasks.values()]

    def tasks_for_image(self, image_id: str) -> list[Task]:
        with self._lock:
            ids = self._tasks_by_image.get(image_id, ())
            return [replace(self.tasks[i]) for i in ids]

    def tasks_for_annotator(self, annotator_id: str) -> list[Task]:
        with self._lock:
            ids = self._tasks_by_annotator.get(annotator_id, ())
            return [replace(self.tasks[i]) for i in ids]

    # -- maintenance ---------------------------------------------------------

    def snapshot_payload(self) -> dict:
        with self._lock:
            return {
                "images": [r.to_payload() for r in self.images.values()],
                "versions": {
                    image_id: [e.to_payload() for e in entries]
                    for image_id, entries in self.versions.items()},
                "annotators": [a.to_payload() for a in self.annotators.values()],
                "tasks": [t.to_payload() for t in self.tasks.values()],
            }

    def compact(self) -> Path:
        """Rewrite the journal as a single snapshot record. Requires that no
        other writers are active."""
        with self._lock:
            record = JournalRecord(
                seq=self.journal.last_seq + 1, ts=utc_now(),
                type="snapshot", payload=self.snapshot_payload())
            self.journal.rewrite([record])
            return self.journal_path

    def dump_state(self) -> dict:
        """Canonical JSON-able state image, used for equality in tests."""
        return self.snapshot_payload()

    def close(self) -> None:
        self.journal.close()
