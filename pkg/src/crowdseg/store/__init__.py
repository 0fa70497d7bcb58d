from .blobs import BlobRef, BlobStore, sha256_hex
from .journal import Journal, JournalRecord, read_journal, utc_now
from .core import VersionEntry, VersionStore

__all__ = [
    "BlobRef",
    "BlobStore",
    "sha256_hex",
    "Journal",
    "JournalRecord",
    "read_journal",
    "utc_now",
    "VersionEntry",
    "VersionStore",
]
