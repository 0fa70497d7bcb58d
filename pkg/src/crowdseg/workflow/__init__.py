from .model import (
    NON_TERMINAL_STATES,
    OPEN_STATES,
    ROLE_RANK,
    ROLES,
    TASK_STATES,
    TASK_TRANSITIONS,
    Annotator,
    Task,
)
from .engine import Workflow, require_role, token_digest

__all__ = [
    "NON_TERMINAL_STATES",
    "OPEN_STATES",
    "ROLE_RANK",
    "ROLES",
    "TASK_STATES",
    "TASK_TRANSITIONS",
    "Annotator",
    "Task",
    "Workflow",
    "require_role",
    "token_digest",
]
