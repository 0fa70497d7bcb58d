"""Content-addressed blob storage: bytes live under their SHA-256 digest."""

from __future__ import annotations

import hashlib
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from ..errors import CorruptBlob, IoFailure, UnknownBlob


@dataclass(frozen=True)
class BlobRef:
    digest: str
    size: int

    def to_payload(self) -> dict:
        return {"digest": self.digest, "size": self.size}

    @classmethod
    def from_payload(cls, d: Mapping) -> "BlobRef":
        return cls(digest=d["digest"], size=d["size"])


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class BlobStore:
    """Immutable blobs under <root>/blobs/<first 2 hex>/<digest>."""

    def __init__(self, root: str | Path):
        self.root = Path(root) / "blobs"
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, digest: str) -> Path:
        return self.root / digest[:2] / digest

    def put(self, data: bytes) -> BlobRef:
        """Store bytes; re-putting identical bytes writes nothing new."""
        digest = sha256_hex(data)
        ref = BlobRef(digest=digest, size=len(data))
        path = self._path(digest)
        if path.exists():
            return ref
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
            try:
                with os.fdopen(fd, "wb") as fh:
                    fh.write(data)
                    fh.flush()
                    os.fsync(fh.fileno())
                os.replace(tmp, path)
            finally:
                if os.path.exists(tmp):
                    os.unlink(tmp)
        except OSError as exc:
            raise IoFailure(f"cannot store blob {digest}: {exc}") from exc
        return ref

    def get(self, ref: BlobRef | str) -> bytes:
        """Read back bytes, re-verifying the digest."""
        digest = ref.digest if isinstance(ref, BlobRef) else ref
        path = self._path(digest)
        if not path.exists():
            raise UnknownBlob(digest)
        data = path.read_bytes()
        if sha256_hex(data) != digest:
            raise CorruptBlob(f"blob {digest} fails digest verification")
        return data

    def exists(self, digest: str) -> bool:
        return self._path(digest).exists()
