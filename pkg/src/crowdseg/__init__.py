"""Self-hosted crowd-sourcing platform for multi-class image segmentation."""

__version__ = "0.1.0"
