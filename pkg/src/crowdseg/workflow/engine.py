"""Task lifecycle operations over the version store.

Transition table (normative, also diagrammed in docs/workflow.md):

    assigned -> in_progress | skipped
    in_progress -> submitted | skipped
    submitted -> reviewed

Submitting over HTTP from an assigned task passes through in_progress
implicitly (two journaled events) so every recorded history is a path in
the table. Roles are cumulative: senior adds review powers on top of
annotator, researcher adds registration/assignment/enrollment/export on
top of senior.
"""

from __future__ import annotations

import hashlib
import secrets
from dataclasses import replace
from typing import TYPE_CHECKING

from ..errors import (
    DuplicateOpenTask,
    IllegalTransition,
    MissingCorrection,
    Unauthorized,
    UnknownTask,
)
from ..store.journal import utc_now
from .model import (
    NON_TERMINAL_STATES,
    OPEN_STATES,
    ROLE_RANK,
    TASK_TRANSITIONS,
    Annotator,
    Task,
)

if TYPE_CHECKING:
    from ..store.core import VersionEntry, VersionStore


def token_digest(token: str) -> str:
    return hashlib.sha256(token.encode("utf-8")).hexdigest()


def require_role(actor: Annotator, minimum: str) -> None:
    if ROLE_RANK[actor.role] < ROLE_RANK[minimum]:
        raise Unauthorized(f"{actor.role} role cannot perform this operation")


class Workflow:
    """Role checks plus the task state machine, persisted via the store."""

    def __init__(self, store: "VersionStore"):
        self.store = store

    # -- annotators ---------------------------------------------------------

    def bootstrap_researcher(self, display_name: str = "root") -> tuple[Annotator, str]:
        """Create the first researcher. Only valid while no annotators exist."""
        if self.store.list_annotators():
            raise Unauthorized("bootstrap is only possible on an empty registry")
        return self._create_annotator(display_name, "researcher")

    def register_annotator(
        self, display_name: str, role: str, actor: Annotator,
    ) -> tuple[Annotator, str]:
        """Register a new annotator; returns the plaintext token exactly once."""
        require_role(actor, "researcher")
        return self._create_annotator(display_name, role)

    def _create_annotator(self, display_name: str, role: str) -> tuple[Annotator, str]:
        token = secrets.token_hex(32)
        annotator = Annotator(
            annotator_id="a-" + secrets.token_hex(6),
            display_name=display_name,
            role=role,
            token_digest=token_digest(token),
            registered_at=utc_now(),
        )
        self.store.register_annotator(annotator)
        return annotator, token

    def set_active(self, annotator_id: str, active: bool, actor: Annotator) -> Annotator:
        require_role(actor, "researcher")
        annotator = self.store.annotator(annotator_id)
        updated = replace(annotator, active=active)
        self.store.update_annotator(updated)
        return updated

    def authenticate(self, token: str) -> Annotator | None:
        """Match a bearer token against registered digests (constant-time)."""
        digest = token_digest(token)
        found = None
        for annotator in self.store.list_annotators():
            if secrets.compare_digest(digest, annotator.token_digest):
                found = annotator
        if found is None or not found.active:
            return None
        return found

    # -- assignment ----------------------------------------------------------

    def assign(self, image_id: str, annotator_id: str, actor: Annotator) -> Task:
        require_role(actor, "researcher")
        image = self.store.image(image_id)   # raises UnknownImage
        if image.status == "reviewed":
            raise IllegalTransition(f"image {image_id} is already reviewed")
        self.store.annotator(annotator_id)   # raises UnknownAnnotator
        for task in self.store.tasks_for_image(image_id):
            if (task.annotator_id == annotator_id
                    and task.state in NON_TERMINAL_STATES):
                raise DuplicateOpenTask(f"{annotator_id} already works on {image_id}")
        task = Task(
            task_id="t-" + secrets.token_hex(6),
            image_id=image_id,
            annotator_id=annotator_id,
            state="assigned",
            updated_at=utc_now(),
        )
        self.store.record_task(task, image_status="assigned")
        return task

    def next_tasks(self, annotator_id: str) -> list[Task]:
        """Open tasks for one annotator, oldest first."""
        self.store.annotator(annotator_id)
        tasks = [t for t in self.store.tasks_for_annotator(annotator_id)
                 if t.state in OPEN_STATES]
        tasks.sort(key=lambda t: (t.updated_at, t.task_id))
        return tasks

    # -- task transitions ------------------------------------------------------

    def _get_task(self, task_id: str) -> Task:
        task = self.store.task(task_id)
        if task is None:
            raise UnknownTask(task_id)
        return task

    def _check_transition(self, task: Task, new_state: str) -> None:
        if (task.state, new_state) not in TASK_TRANSITIONS:
            raise IllegalTransition(f"{task.state} -> {new_state}")

    def start(self, task_id: str, actor: Annotator) -> Task:
        """Move an assigned task to in_progress (owner only)."""
        task = self._get_task(task_id)
        if task.annotator_id != actor.annotator_id:
            raise Unauthorized("only the task owner may start it")
        self._check_transition(task, "in_progress")
        task = replace(task, state="in_progress", updated_at=utc_now())
        self.store.record_task(task)
        return task

    def submit(self, task_id: str, mask_bytes: bytes, actor: Annotator) -> "VersionEntry":
        """Store the mask, append a manual version and close out the task."""
        task = self._get_task(task_id)
        if task.annotator_id != actor.annotator_id:
            raise Unauthorized("only the task owner may submit")
        if task.state == "assigned":
            # implicit start keeps the recorded history on the transition graph
            task = self.start(task_id, actor)
        self._check_transition(task, "submitted")
        blob = self.store.put_blob(mask_bytes)
        done = replace(task, state="submitted", updated_at=utc_now())
        return self.store.append_version(
            task.image_id, blob, actor.annotator_id, "manual",
            image_status="segmented", task=done)

    def review(
        self,
        task_id: str,
        verdict: str,
        actor: Annotator,
        corrected_mask: bytes | None = None,
    ) -> "VersionEntry":
        """Senior verdict on the submitted head; corrections append a new
        version by the senior in the same journal step."""
        require_role(actor, "senior")
        task = self._get_task(task_id)
        self._check_transition(task, "reviewed")
        if verdict == "corrected" and corrected_mask is None:
            raise MissingCorrection("corrected verdict requires a mask payload")
        head = self.store.head(task.image_id)
        correction_blob = None
        if corrected_mask is not None:
            correction_blob = self.store.put_blob(corrected_mask)
        done = replace(task, state="reviewed", updated_at=utc_now())
        return self.store.mark_review(
            task.image_id, head.version_no, actor.annotator_id, verdict,
            correction_blob=correction_blob if verdict == "corrected" else None,
            correction_annotator=actor.annotator_id,
            task=done, image_status="reviewed")

    def skip(
        self,
        task_id: str,
        reason: str,
        actor: Annotator,
        quality_grade: float | None = None,
    ) -> Task:
        """Give up on a task; the image is only marked skipped when nobody
        else still works on it."""
        task = self._get_task(task_id)
        if task.annotator_id != actor.annotator_id:
            raise Unauthorized("only the task owner may skip")
        self._check_transition(task, "skipped")
        done = replace(
            task, state="skipped", skip_reason=reason,
            quality_grade_at_skip=quality_grade, updated_at=utc_now())
        others_active = any(
            t.state in NON_TERMINAL_STATES
            for t in self.store.tasks_for_image(task.image_id)
            if t.task_id != task.task_id)
        image = self.store.image(task.image_id)
        new_status = None
        if not others_active and image.status in ("pending", "assigned"):
            new_status = "skipped"
        self.store.record_task(done, image_status=new_status)
        return done

    def restore(self, image_id: str, version_no: int, actor: Annotator) -> "VersionEntry":
        require_role(actor, "senior")
        return self.store.restore(image_id, version_no, actor.annotator_id)
