"""Exception types shared across the platform."""


class CrowdsegError(Exception):
    """Base class for all errors raised by this package."""


# mask codecs and metrics

class MalformedRle(CrowdsegError):
    """RLE payload is structurally invalid or does not cover the raster."""


class MalformedContainer(CrowdsegError):
    """Mask container bytes are invalid (magic, version, truncation)."""


class DimensionMismatch(CrowdsegError):
    """Two rasters that must share dimensions do not."""


class LayerSetMismatch(CrowdsegError):
    """Two masks that must share layer names do not."""


class EmptyPolyline(CrowdsegError):
    """A stroke was given with no points."""


# vision

class NonPositiveSigma(CrowdsegError):
    """Gaussian scale must be > 0."""


# storage

class IoFailure(CrowdsegError):
    """Underlying filesystem operation failed."""


class UnknownBlob(CrowdsegError):
    """No blob stored under the given digest."""


class CorruptBlob(CrowdsegError):
    """Stored blob bytes no longer match their digest."""


class UnknownImage(CrowdsegError):
    """Image id is not enrolled."""


class UnknownVersion(CrowdsegError):
    """Version number does not exist for the image."""


class NoVersions(CrowdsegError):
    """Image has no segmentation versions yet."""


class AlreadyReviewed(CrowdsegError):
    """Version review fields were already set."""


class CorruptJournal(CrowdsegError):
    """Journal contains a malformed record before the end of the file."""


# workflow

class UnknownAnnotator(CrowdsegError):
    """Annotator id is not registered."""


class UnknownTask(CrowdsegError):
    """Task id does not exist."""


class Unauthorized(CrowdsegError):
    """Actor lacks the role or ownership required for the operation."""


class DuplicateOpenTask(CrowdsegError):
    """An open task already exists for this (image, annotator) pair."""


class IllegalTransition(CrowdsegError):
    """Requested task state change is not in the transition table."""


class MissingCorrection(CrowdsegError):
    """A corrected verdict requires a replacement mask."""


# batch selection

class UnknownStrategy(CrowdsegError):
    """Batch selection strategy name is not registered."""
