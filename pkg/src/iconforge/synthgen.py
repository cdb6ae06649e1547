"""Synthetic icon-detection windows: paste transparent icons onto empty patches of infographics."""
from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import imaging
from .boxes import BBox
from .jsonl import SCHEMA_VERSION, dumps, read_jsonl, write_jsonl

log = logging.getLogger(__name__)

MODES = ("default", "random_locations", "nontransparent_icons", "blank_background")


class SampleRejected(Exception):
    """No icon could be placed in a window; the caller should draw a new one."""


@dataclass
class AugmentParams:
    icons_per_window: int = 4
    icon_size_min: int = 30
    icon_size_max: int = 240
    entropy_threshold: float = 0.05
    contrast_threshold: float = 500.0
    max_patch_tries: int = 50
    max_icon_draws: int = 10
    max_window_tries: int = 100
    window_size: int = 600
    rng_seed: int = 0
    canny_low: float = imaging.CANNY_LOW
    canny_high: float = imaging.CANNY_HIGH
    sigma_frac: float = imaging.SIGMA_FRAC

    def __post_init__(self):
        if not 1 <= self.icons_per_window <= 16:
            raise ValueError("icons_per_window must be in [1, 16]")
        if not 0 < self.icon_size_min <= self.icon_size_max <= self.window_size - 1:
            raise ValueError("need 0 < icon_size_min <= icon_size_max <= window_size - 1")
        if not 0.0 <= self.entropy_threshold <= 1.0:
            raise ValueError("entropy_threshold must be in [0, 1]")
        if self.contrast_threshold < 0:
            raise ValueError("contrast_threshold must be nonnegative")
        if self.max_patch_tries < 1 or self.max_icon_draws < 1 or self.max_window_tries < 1:
            raise ValueError("retry budgets must be >= 1")

    def entropy(self, patch: np.ndarray) -> float:
        return imaging.patch_entropy(patch, self.canny_low, self.canny_high, self.sigma_frac)


@dataclass
class IconAsset:
    id: str
    image: np.ndarray
    tag: str
    transparent: bool

    @classmethod
    def from_image(cls, id: str, image: np.ndarray, tag: str) -> "IconAsset":
        transparent = image.shape[2] == 4 and bool((image[..., 3] < 255).any())
        return cls(id, image, tag, transparent)


@dataclass
class PlacedIcon:
    box: BBox
    icon_id: str
    tag: str
    patch: BBox  # square region that passed the gates; the icon is centred in it


@dataclass
class SyntheticSample:
    window: np.ndarray
    boxes: list[PlacedIcon]
    source_id: str | None
    window_origin: tuple[int, int]
    source_scale: float = 1.0
    attempts: int = 1

    def record(self, image_id: str, image_path: str) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "image_id": image_id,
            "image_path": image_path,
            "source_id": self.source_id,
            "window_origin": list(self.window_origin),
            "source_scale": self.source_scale,
            "boxes": [
                {**p.box.as_dict(), "tag": p.tag, "icon_id": p.icon_id, "patch": p.patch.as_dict()}
                for p in self.boxes
            ],
        }


def load_icon_manifest(path: str | Path) -> list[IconAsset]:
    """Read a JSONL icon manifest ``{id, path, tag, transparent}``; paths are manifest-relative."""
    path = Path(path)
    icons = []
    for lineno, rec in read_jsonl(path):
        img_path = path.parent / rec["path"]
        try:
            img = imaging.load_image(img_path, "RGBA")
        except OSError as e:
            raise OSError(f"{img_path}: {e}") from e
        asset = IconAsset.from_image(str(rec["id"]), img, rec["tag"])
        if "transparent" in rec and bool(rec["transparent"]) != asset.transparent:
            log.warning("%s:%d: manifest says transparent=%s but pixels say %s",
                        path, lineno, rec["transparent"], asset.transparent)
        icons.append(asset)
    return icons


def write_icon_manifest(icons: Sequence[IconAsset], out_dir: str | Path) -> Path:
    out_dir = Path(out_dir)
    (out_dir / "icons").mkdir(parents=True, exist_ok=True)
    records = []
    for icon in icons:
        rel = f"icons/{icon.id}.png"
        imaging.save_image(icon.image, out_dir / rel)
        records.append({"id": icon.id, "path": rel, "tag": icon.tag, "transparent": icon.transparent})
    manifest = out_dir / "icons.jsonl"
    write_jsonl(manifest, records)
    return manifest


def sample_window(infographic: np.ndarray, size: int, rng: np.random.Generator):
    """Crop a uniformly placed ``size`` x ``size`` window.

    Images with a side shorter than ``size`` are first upscaled so the short
    side equals ``size``.  Returns ``(window, (x, y), scale)`` where the origin
    is in the (possibly upscaled) image.
    """
    h, w = infographic.shape[:2]
    scale = 1.0
    if min(h, w) < size:
        scale = size / min(h, w)
        infographic = imaging.resize(
            infographic, max(size, round(w * scale)), max(size, round(h * scale))
        )
        h, w = infographic.shape[:2]
    x = int(rng.integers(0, w - size + 1))
    y = int(rng.integers(0, h - size + 1))
    return infographic[y:y + size, x:x + size, :3].copy(), (x, y), scale


def find_valid_patch(
    window: np.ndarray,
    desired_size: int,
    params: AugmentParams,
    rng: np.random.Generator,
    occupied: Sequence[BBox] = (),
    check_entropy: bool = True,
) -> BBox | None:
    """First random square patch that is empty enough, or None after ``max_patch_tries``.

    Candidates overlapping any ``occupied`` box use up a try.
    """
    h, w = window.shape[:2]
    s = desired_size
    if s > min(h, w) - 1:
        raise ValueError(f"patch size {s} too large for {w}x{h} window")
    for _ in range(params.max_patch_tries):
        x = int(rng.integers(0, w - s + 1))
        y = int(rng.integers(0, h - s + 1))
        cand = BBox(x, y, s, s)
        if any(cand.overlaps(b) for b in occupied):
            continue
        if not check_entropy or params.entropy(window[y:y + s, x:x + s]) <= params.entropy_threshold:
            return cand
    return None


def fit_icon(icon: np.ndarray, size: int, min_side: int) -> np.ndarray:
    """Resize so the long side equals ``size``, keeping aspect.

    The short side is clamped up to ``min_side`` for elongated icons.
    """
    h, w = icon.shape[:2]
    if w >= h:
        nw, nh = size, max(min_side, round(h * size / w))
    else:
        nw, nh = max(min_side, round(w * size / h)), size
    return imaging.resize_rgba(icon, min(nw, size), min(nh, size))


def augment_window(
    window: np.ndarray,
    icon_pool: Sequence[IconAsset],
    params: AugmentParams,
    rng: np.random.Generator,
    gates: bool = True,
) -> tuple[np.ndarray, list[PlacedIcon]]:
    """Paste up to ``icons_per_window`` icons onto gated, non-overlapping patches.

    With ``gates=False`` both the entropy and the contrast checks are skipped.
    Raises SampleRejected when nothing could be placed.
    """
    if not icon_pool:
        raise ValueError("icon pool is empty")
    base = window
    out = window.copy()
    placed: list[PlacedIcon] = []
    for _ in range(params.icons_per_window):
        size = int(rng.integers(params.icon_size_min, params.icon_size_max + 1))
        patch = find_valid_patch(
            base, size, params, rng, occupied=[p.patch for p in placed], check_entropy=gates
        )
        if patch is None:
            continue
        px, py = int(patch.x), int(patch.y)
        region = base[py:py + size, px:px + size]
        for _ in range(params.max_icon_draws):
            asset = icon_pool[int(rng.integers(len(icon_pool)))]
            icon = fit_icon(asset.image, size, params.icon_size_min)
            if not imaging.opaque_mask(icon).any():
                continue
            if not gates or imaging.contrast_score(region, icon) >= params.contrast_threshold:
                break
        else:
            continue
        ih, iw = icon.shape[:2]
        x, y = px + (size - iw) // 2, py + (size - ih) // 2
        out = imaging.alpha_composite(out, icon, x, y)
        placed.append(PlacedIcon(BBox(x, y, iw, ih), asset.id, asset.tag, patch))
    if not placed:
        raise SampleRejected("no icon could be placed in this window")
    return out, placed


@dataclass
class _Job:
    corpus: Mapping[str, np.ndarray | str | Path]
    pool: list[IconAsset]
    params: AugmentParams
    mode: str
    _cache: dict = field(default_factory=dict)

    def image(self, source_id: str) -> np.ndarray:
        if source_id not in self._cache:
            src = self.corpus[source_id]
            self._cache[source_id] = (
                src if isinstance(src, np.ndarray) else imaging.load_image(src, "RGB")
            )
        return self._cache[source_id]


def icon_pool_for_mode(icons: Sequence[IconAsset], mode: str) -> list[IconAsset]:
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    want_transparent = mode != "nontransparent_icons"
    return [i for i in icons if i.transparent == want_transparent]


def generate_sample(index: int, job: _Job) -> SyntheticSample:
    """Sample ``index`` of a dataset; depends only on (corpus, pool, params, mode, index)."""
    p = job.params
    rng = np.random.default_rng([p.rng_seed, index])
    ids = sorted(job.corpus)
    for attempt in range(1, p.max_window_tries + 1):
        source_id = ids[int(rng.integers(len(ids)))]
        if job.mode == "blank_background":
            window = np.full((p.window_size, p.window_size, 3), 255, np.uint8)
            origin, scale, source_id = (0, 0), 1.0, None
        else:
            window, origin, scale = sample_window(job.image(source_id), p.window_size, rng)
        try:
            out, placed = augment_window(window, job.pool, p, rng, gates=job.mode != "random_locations")
        except SampleRejected:
            continue
        return SyntheticSample(out, placed, source_id, origin, scale, attempt)
    raise RuntimeError(f"sample {index}: no usable window after {p.max_window_tries} tries")


_worker_job: _Job | None = None


def _init_worker(job: _Job) -> None:
    global _worker_job
    _worker_job = job


def _render(args) -> dict:
    index, out_dir = args
    sample = generate_sample(index, _worker_job)
    image_id = f"{index:06d}"
    rel = f"images/{image_id}.png"
    imaging.save_image(sample.window, Path(out_dir) / rel)
    return sample.record(image_id, rel)


def generate_dataset(
    corpus: Mapping[str, np.ndarray | str | Path],
    icon_pool: Sequence[IconAsset],
    params: AugmentParams,
    n_windows: int,
    out_dir: str | Path,
    mode: str = "default",
    workers: int | None = 1,
) -> list[dict]:
    """Write ``n_windows`` augmented windows plus ``annotations.jsonl`` and ``manifest.json``.

    ``corpus`` maps source ids to images or image paths.  The output is a
    deterministic function of the inputs and ``params.rng_seed`` regardless of
    ``workers``.
    """
    if not corpus:
        raise ValueError("corpus is empty")
    pool = icon_pool_for_mode(icon_pool, mode)
    if not pool:
        raise ValueError(f"no icons usable in mode {mode!r}")
    out_dir = Path(out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)

    job = _Job(dict(corpus), pool, params, mode)
    tasks = [(i, str(out_dir)) for i in range(n_windows)]
    workers = workers or os.cpu_count() or 1
    if workers == 1 or n_windows < 2:
        _init_worker(job)
        records = [_render(t) for t in tasks]
    else:
        chunk = max(1, math.ceil(n_windows / (workers * 8)))
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(job,)) as ex:
            records = list(ex.map(_render, tasks, chunksize=chunk))

    write_jsonl(out_dir / "annotations.jsonl", records)
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "mode": mode,
        "n_windows": n_windows,
        "params": asdict(params),
        "corpus": sorted(corpus),
        "icons": sorted(i.id for i in pool),
    }
    (out_dir / "manifest.json").write_text(dumps(manifest) + "\n")
    return records


def generate_baseline_dataset(mode: str, corpus, icon_pool, params, n_windows, out_dir, workers=1):
    """Ablation datasets: ``random_locations``, ``nontransparent_icons`` or ``blank_background``."""
    if mode == "default":
        raise ValueError("baseline mode must name a disabled gate")
    return generate_dataset(corpus, icon_pool, params, n_windows, out_dir, mode, workers)


def load_corpus(directory: str | Path) -> dict[str, Path]:
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"corpus directory not found: {directory}")
    exts = {".png", ".jpg", ".jpeg"}
    return {p.stem: p for p in sorted(directory.iterdir()) if p.suffix.lower() in exts}


def load_annotations(path: str | Path) -> list[dict]:
    return [rec for _, rec in read_jsonl(path)]
