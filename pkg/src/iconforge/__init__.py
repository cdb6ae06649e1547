"""Synthetic icon-detection data and multi-modal summaries for infographics."""

from .boxes import BBox, iou

__version__ = "0.1.0"
__all__ = ["BBox", "iou", "__version__"]
