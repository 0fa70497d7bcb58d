"""Annotator identities, roles, and the task state machine."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

ROLES = ("annotator", "senior", "researcher")

# Cumulative privileges: senior can do everything an annotator can plus
# review; researcher can additionally register, assign, enroll and export.
ROLE_RANK = {"annotator": 0, "senior": 1, "researcher": 2}

TASK_STATES = ("assigned", "in_progress", "submitted", "reviewed", "skipped")

TASK_TRANSITIONS = frozenset({
    ("assigned", "in_progress"),
    ("in_progress", "submitted"),
    ("in_progress", "skipped"),
    ("submitted", "reviewed"),
    ("assigned", "skipped"),
})

OPEN_STATES = ("assigned", "in_progress")
NON_TERMINAL_STATES = ("assigned", "in_progress", "submitted")


@dataclass
class Annotator:
    annotator_id: str
    display_name: str
    role: str
    token_digest: str
    registered_at: str
    active: bool = True

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")

    def to_payload(self) -> dict:
        return {
            "annotator_id": self.annotator_id,
            "display_name": self.display_name,
            "role": self.role,
            "token_digest": self.token_digest,
            "registered_at": self.registered_at,
            "active": self.active,
        }

    def public_payload(self) -> dict:
        """Response shape; never includes the token digest."""
        return {
            "annotator_id": self.annotator_id,
            "display_name": self.display_name,
            "role": self.role,
            "active": self.active,
        }

    @classmethod
    def from_payload(cls, d: Mapping) -> "Annotator":
        return cls(**{k: d[k] for k in (
            "annotator_id", "display_name", "role", "token_digest",
            "registered_at", "active")})


@dataclass
class Task:
    task_id: str
    image_id: str
    annotator_id: str
    state: str
    updated_at: str
    quality_grade_at_skip: float | None = None
    skip_reason: str | None = None

    def __post_init__(self):
        if self.state not in TASK_STATES:
            raise ValueError(f"unknown task state {self.state!r}")

    @property
    def is_open(self) -> bool:
        return self.state in OPEN_STATES

    def to_payload(self) -> dict:
        return {
            "task_id": self.task_id,
            "image_id": self.image_id,
            "annotator_id": self.annotator_id,
            "state": self.state,
            "updated_at": self.updated_at,
            "quality_grade_at_skip": self.quality_grade_at_skip,
            "skip_reason": self.skip_reason,
        }

    @classmethod
    def from_payload(cls, d: Mapping) -> "Task":
        return cls(**{k: d[k] for k in (
            "task_id", "image_id", "annotator_id", "state", "updated_at",
            "quality_grade_at_skip", "skip_reason")})
