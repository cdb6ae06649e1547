"""Axis-aligned boxes in pixel coordinates (top-left origin, half-open extents)."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class BBox:
    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"box must have positive extent, got w={self.w}, h={self.h}")

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    @property
    def area(self) -> float:
        return self.w * self.h

    def intersection(self, other: "BBox") -> float:
        iw = min(self.x2, other.x2) - max(self.x, other.x)
        ih = min(self.y2, other.y2) - max(self.y, other.y)
        if iw <= 0 or ih <= 0:
            return 0.0
        return iw * ih

    def overlaps(self, other: "BBox") -> bool:
        return self.intersection(other) > 0

    def within(self, width: float, height: float) -> bool:
        return self.x >= 0 and self.y >= 0 and self.x2 <= width and self.y2 <= height

    def as_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "w": self.w, "h": self.h}

    @classmethod
    def from_dict(cls, d: dict) -> "BBox":
        return cls(d["x"], d["y"], d["w"], d["h"])


def iou(a: BBox, b: BBox) -> float:
    """Intersection area over union area."""
    inter = a.intersection(b)
    if inter == 0.0:
        return 0.0
    return inter / (a.area + b.area - inter)


def containment(small: BBox, large: BBox) -> float:
    """Fraction of ``small``'s area that lies inside ``large``."""
    return small.intersection(large) / small.area
