"""Three-scale window pyramid over an infographic and the inverse box mapping."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import imaging
from .boxes import BBox
from .jsonl import SCHEMA_VERSION, dumps

TILE_SIZE = 600
OVERLAP = 0.1
LEVELS = (1, 2, 3)


@dataclass
class Tile:
    id: str
    level: int
    row: int
    col: int
    region: BBox  # source-image pixels
    size: int = TILE_SIZE
    rendered: np.ndarray | None = None

    @property
    def scale_x(self) -> float:
        return self.size / self.region.w

    @property
    def scale_y(self) -> float:
        return self.size / self.region.h

    def record(self, path: str | None = None) -> dict:
        rec = {
            "id": self.id, "level": self.level, "row": self.row, "col": self.col,
            "region": self.region.as_dict(), "scale_x": self.scale_x, "scale_y": self.scale_y,
            "size": self.size,
        }
        if path is not None:
            rec["path"] = path
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "Tile":
        return cls(rec["id"], rec["level"], rec["row"], rec["col"],
                   BBox.from_dict(rec["region"]), rec.get("size", TILE_SIZE))


def axis_layout(length: float, n: int, overlap: float = OVERLAP) -> tuple[float, list[float]]:
    """Tile side and origins for ``n`` windows covering ``length`` pixels.

    Side solves ``n*s - (n-1)*overlap*s = length`` and the stride is
    ``(1 - overlap) * s``, so the last window ends flush with the far edge.
    Values are fractional; tiles are resampled, not cropped.
    """
    side = length / (n - overlap * (n - 1))
    stride = (1 - overlap) * side
    origins = [i * stride for i in range(n)]
    if n > 1:
        origins[-1] = length - side  # exact flush despite float error
    return side, origins


def tile_regions(width: int, height: int, levels=LEVELS, overlap: float = OVERLAP):
    for n in levels:
        sw, xs = axis_layout(width, n, overlap)
        sh, ys = axis_layout(height, n, overlap)
        for r, y in enumerate(ys):
            for c, x in enumerate(xs):
                yield n, r, c, BBox(x, y, sw, sh)


def tile(image: np.ndarray, image_id: str = "image", levels=LEVELS, size: int = TILE_SIZE,
         render: bool = True) -> list[Tile]:
    """1 + 4 + 9 windows (for the default levels), each rendered at ``size`` x ``size``."""
    image = imaging.check_image(image)
    h, w = image.shape[:2]
    tiles = []
    for n, r, c, region in tile_regions(w, h, levels):
        t = Tile(f"{image_id}/L{n}r{r}c{c}", n, r, c, region, size)
        if render:
            t.rendered = imaging.resample_region(
                image[..., :3], region.x, region.y, region.w, region.h, size, size
            )
        tiles.append(t)
    return tiles


def unmap(box: BBox, tile: Tile) -> BBox:
    """Tile-pixel box -> source-image box."""
    s = tile.size
    eps = 1e-6 * s  # float slack from an image->tile round trip
    if box.x < -eps or box.y < -eps or box.x2 > s + eps or box.y2 > s + eps:
        raise ValueError(f"box {box} lies outside the {s}x{s} tile {tile.id}")
    return BBox(
        tile.region.x + box.x / tile.scale_x,
        tile.region.y + box.y / tile.scale_y,
        box.w / tile.scale_x,
        box.h / tile.scale_y,
    )


def to_tile(box: BBox, tile: Tile) -> BBox:
    """Source-image box -> tile-pixel box (inverse of :func:`unmap`)."""
    return BBox(
        (box.x - tile.region.x) * tile.scale_x,
        (box.y - tile.region.y) * tile.scale_y,
        box.w * tile.scale_x,
        box.h * tile.scale_y,
    )


def write_tiles(image: np.ndarray, image_id: str, out_dir: str | Path) -> Path:
    """Render tiles as PNGs next to a ``tiles.json`` index and return the index path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tiles = tile(image, image_id)
    records = []
    for t in tiles:
        name = f"L{t.level}r{t.row}c{t.col}.png"
        imaging.save_image(t.rendered, out_dir / name)
        records.append(t.record(name))
    index = {
        "schema_version": SCHEMA_VERSION,
        "image_id": image_id,
        "width": int(image.shape[1]),
        "height": int(image.shape[0]),
        "tiles": records,
    }
    path = out_dir / "tiles.json"
    path.write_text(dumps(index) + "\n")
    return path
