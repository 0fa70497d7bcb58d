"""Server configuration."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from ..vision.providers import get_preseg_provider, get_quality_provider

TOKEN_HEADER = "Authorization"
TOKEN_SCHEME = "Bearer"


@dataclass
class ApiConfig:
    data_root: Path
    host: str = "127.0.0.1"
    port: int = 8077
    preseg_provider: str = "frangi-v1"
    quality_provider: str = "heuristic-q1"
    max_upload_bytes: int = 64 * 2**20
    fsync: bool = True

    def __post_init__(self):
        self.data_root = Path(self.data_root)
        if self.max_upload_bytes < 1:
            raise ValueError("max_upload_bytes must be positive")
        # fail fast on unknown provider names
        get_preseg_provider(self.preseg_provider)
        get_quality_provider(self.quality_provider)
