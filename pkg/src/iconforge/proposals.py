"""Detections: ingestion of external detector output and a non-neural baseline proposer."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from . import imaging
from .boxes import BBox
from .jsonl import RecordError, read_jsonl
from .tiler import Tile, unmap

PROB_TOL = 1e-6
MIN_SIDE = 15
MAX_SIDE = 580


@dataclass
class Detection:
    box: BBox
    score: float
    class_probs: np.ndarray | None = None
    image_id: str | None = None
    id: str | None = None

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [0, 1]")
        if self.class_probs is not None:
            self.class_probs = check_probs(self.class_probs)

    def record(self) -> dict:
        rec = {"image_id": self.image_id, **self.box.as_dict(), "score": self.score}
        if self.id is not None:
            rec["proposal_id"] = self.id
        if self.class_probs is not None:
            rec["class_probs"] = [float(p) for p in self.class_probs]
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "Detection":
        probs = rec.get("class_probs")
        return cls(BBox.from_dict(rec), float(rec["score"]),
                   None if probs is None else np.asarray(probs, dtype=np.float64),
                   rec.get("image_id"), rec.get("proposal_id"))


def check_probs(p) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or not np.all(np.isfinite(p)):
        raise ValueError("class_probs must be a finite 1-D vector")
    if (p < 0).any():
        raise ValueError("class_probs has negative entries")
    if abs(p.sum() - 1.0) > PROB_TOL:
        raise ValueError(f"class_probs sums to {p.sum():.9f}, not 1")
    return p


def load_tile_index(path: str | Path) -> tuple[str, dict[str, Tile]]:
    index = json.loads(Path(path).read_text())
    tiles = {rec["id"]: Tile.from_record(rec) for rec in index["tiles"]}
    return index["image_id"], tiles


def ingest_detections(path: str | Path, tile_indexes) -> list[Detection]:
    """Read per-tile detections ``{tile_id, x, y, w, h, score, class_probs?}`` into image coordinates.

    ``tile_indexes`` is one or more tile-index paths (or already loaded
    ``(image_id, tiles)`` pairs).  Errors name the offending line.
    """
    if isinstance(tile_indexes, (str, Path, tuple)):
        tile_indexes = [tile_indexes]
    tiles: dict[str, tuple[str, Tile]] = {}
    for ti in tile_indexes:
        image_id, by_id = ti if isinstance(ti, tuple) else load_tile_index(ti)
        for tid, t in by_id.items():
            tiles[tid] = (image_id, t)

    dets = []
    n_probs = None
    for lineno, rec in read_jsonl(path):
        where = f"{path}:{lineno}"
        tid = rec.get("tile_id")
        if tid not in tiles:
            raise RecordError(f"{where}: unknown tile id {tid!r}")
        image_id, t = tiles[tid]
        try:
            box = BBox(float(rec["x"]), float(rec["y"]), float(rec["w"]), float(rec["h"]))
            score = float(rec["score"])
            if not 0.0 <= score <= 1.0:
                raise ValueError(f"score {score} outside [0, 1]")
            probs = rec.get("class_probs")
            if probs is not None:
                probs = check_probs(probs)
                if n_probs is not None and len(probs) != n_probs:
                    raise ValueError(f"class_probs has {len(probs)} entries, expected {n_probs}")
                n_probs = len(probs)
            image_box = unmap(box, t)
        except KeyError as e:
            raise RecordError(f"{where}: missing field {e}") from None
        except (TypeError, ValueError) as e:
            raise RecordError(f"{where}: {e}") from None
        dets.append(Detection(image_box, score, probs, image_id))
    return dets


def baseline_propose(tile: np.ndarray, min_side: int = MIN_SIDE, max_side: int = MAX_SIDE) -> list[Detection]:
    """Edge-blob proposals: Canny, 3x3 dilation (2 iterations), connected components.

    Keeps component boxes with both sides in ``[min_side, max_side]``; the
    score is the density of raw edge pixels inside the box.
    """
    edges = imaging.canny(tile)
    grown = ndimage.binary_dilation(edges, structure=np.ones((3, 3), bool), iterations=2)
    labels, _ = ndimage.label(grown, structure=np.ones((3, 3), bool))
    dets = []
    for sl in ndimage.find_objects(labels):
        if sl is None:
            continue
        ys, xs = sl
        h, w = ys.stop - ys.start, xs.stop - xs.start
        if not (min_side <= w <= max_side and min_side <= h <= max_side):
            continue
        score = float(edges[sl].sum()) / (w * h)
        dets.append(Detection(BBox(xs.start, ys.start, w, h), min(1.0, max(0.0, score))))
    return dets
