"""Procedural stand-ins for the scraped data: infographic-like pages, icons, words.

Used by the tests and the demo scripts so the whole pipeline runs offline.
"""
from __future__ import annotations

import numpy as np
from PIL import Image, ImageDraw

from .summarize import EmbeddingTable
from .synthgen import IconAsset

TOY_TAGS = (
    "health", "money", "travel", "food", "energy", "education",
    "technology", "environment", "sports", "music", "science", "safety",
)
_SHAPES = ("circle", "square", "triangle", "diamond", "ring", "cross")


def _color(rng, lo=0, hi=256):
    return tuple(int(c) for c in rng.integers(lo, hi, 3))


def toy_infographic(rng: np.random.Generator, width: int | None = None, height: int | None = None) -> np.ndarray:
    """A page with flat background, text-like lines, a bar chart, glyphs and a noisy panel."""
    w = width or int(rng.integers(700, 1300))
    h = height or int(rng.integers(900, 1800))
    bg = _color(rng, 215, 256)
    im = Image.new("RGB", (w, h), bg)
    d = ImageDraw.Draw(im)
    d.rectangle([0, 0, w, int(h * 0.06)], fill=_color(rng, 0, 120))
    # paragraphs of "text": short dark bars in rows
    for _ in range(int(rng.integers(3, 7))):
        x0 = int(rng.integers(0, w - 260))
        y0 = int(rng.integers(h // 10, h - 120))
        ink = _color(rng, 0, 90)
        for row in range(int(rng.integers(3, 7))):
            x = x0
            while x < x0 + 240:
                wl = int(rng.integers(8, 30))
                d.rectangle([x, y0 + row * 14, x + wl, y0 + row * 14 + 6], fill=ink)
                x += wl + 6
    # bar chart
    cx, cy = int(rng.integers(0, w - 220)), int(rng.integers(h // 10, h - 220))
    for i in range(5):
        bh = int(rng.integers(30, 180))
        d.rectangle([cx + i * 40, cy + 200 - bh, cx + i * 40 + 28, cy + 200], fill=_color(rng, 0, 200))
    # pictographic glyphs
    for _ in range(int(rng.integers(2, 6))):
        r = int(rng.integers(15, 50))
        gx, gy = int(rng.integers(r, w - r)), int(rng.integers(r, h - r))
        d.ellipse([gx - r, gy - r, gx + r, gy + r], fill=_color(rng, 0, 200))
    arr = np.asarray(im).copy()
    # one textured panel
    pw, ph = int(rng.integers(120, 300)), int(rng.integers(120, 300))
    px, py = int(rng.integers(0, w - pw)), int(rng.integers(0, h - ph))
    arr[py:py + ph, px:px + pw] = rng.integers(0, 256, (ph, pw, 3), dtype=np.uint8)
    return arr


def toy_icon(rng: np.random.Generator, shape: str, size: int = 96) -> np.ndarray:
    """RGBA glyph on a transparent background with a two-tone fill."""
    im = Image.new("RGBA", (size, size), (0, 0, 0, 0))
    d = ImageDraw.Draw(im)
    m = size // 10
    box = [m, m, size - m, size - m]
    fill = _color(rng, 0, 160) + (255,)
    detail = (255, 255, 255, 255) if rng.random() < 0.5 else (20, 20, 20, 255)
    c = size // 2
    if shape == "circle":
        d.ellipse(box, fill=fill)
    elif shape == "square":
        d.rectangle(box, fill=fill)
    elif shape == "triangle":
        d.polygon([(c, m), (size - m, size - m), (m, size - m)], fill=fill)
    elif shape == "diamond":
        d.polygon([(c, m), (size - m, c), (c, size - m), (m, c)], fill=fill)
    elif shape == "ring":
        d.ellipse(box, fill=fill)
        d.ellipse([c - size // 5, c - size // 5, c + size // 5, c + size // 5], fill=(0, 0, 0, 0))
    elif shape == "cross":
        t = size // 6
        d.rectangle([c - t, m, c + t, size - m], fill=fill)
        d.rectangle([m, c - t, size - m, c + t], fill=fill)
    else:
        raise ValueError(shape)
    if shape != "ring":
        q = size // 6
        d.ellipse([c - q, c - q, c + q, c + q], fill=detail)
    return np.asarray(im).copy()


def toy_icons(rng: np.random.Generator, n: int = 24, with_opaque: bool = True) -> list[IconAsset]:
    """``n`` transparent icons plus, optionally, an opaque-background copy of each."""
    icons = []
    for i in range(n):
        shape = _SHAPES[i % len(_SHAPES)]
        tag = TOY_TAGS[i % len(TOY_TAGS)]
        size = int(rng.integers(64, 129))
        img = toy_icon(rng, shape, size)
        icons.append(IconAsset.from_image(f"icon{i:03d}", img, tag))
        if with_opaque:
            bg = np.empty_like(img)
            bg[..., :3] = _color(rng, 180, 256)
            bg[..., 3] = 255
            a = img[..., 3:4].astype(np.float64) / 255
            flat = np.round(a * img[..., :3] + (1 - a) * bg[..., :3]).astype(np.uint8)
            opaque = np.dstack([flat, np.full(img.shape[:2], 255, np.uint8)])
            icons.append(IconAsset.from_image(f"opaque{i:03d}", opaque, tag))
    return icons


def toy_corpus(rng: np.random.Generator, n: int = 20) -> dict[str, np.ndarray]:
    return {f"info{i:03d}": toy_infographic(rng) for i in range(n)}


TOY_WORDS = {
    "health": ["doctor", "hospital", "medicine", "nurse", "patient"],
    "money": ["bank", "dollar", "budget", "savings", "loan"],
    "travel": ["flight", "hotel", "passport", "luggage", "tourist"],
    "food": ["recipe", "kitchen", "vegetable", "bread", "meal"],
    "energy": ["solar", "power", "electricity", "battery", "fuel"],
    "education": ["school", "teacher", "student", "exam", "library"],
    "technology": ["computer", "software", "internet", "robot", "phone"],
    "environment": ["forest", "climate", "recycling", "ocean", "pollution"],
    "sports": ["football", "stadium", "athlete", "coach", "tournament"],
    "music": ["guitar", "concert", "song", "piano", "band"],
    "science": ["laboratory", "experiment", "atom", "research", "theory"],
    "safety": ["helmet", "warning", "emergency", "fire", "alarm"],
}
FILLER = ["the", "and", "of", "to", "in", "is", "for", "with", "more", "than"]


def toy_embeddings(rng: np.random.Generator, dim: int = 300):
    """Word vectors clustered around one random direction per tag."""
    vectors = {}
    for tag in TOY_TAGS:
        centre = rng.normal(0, 1, dim)
        for w in TOY_WORDS[tag]:
            vectors[w] = centre + rng.normal(0, 0.3, dim)
    for w in FILLER:
        vectors[w] = rng.normal(0, 1, dim)
    return EmbeddingTable(vectors, dim)


def toy_documents(rng: np.random.Generator, n: int) -> list[tuple[list[str], list[str]]]:
    """Bags of words drawn from 1-2 tags plus filler; returns ``(words, tags)`` pairs."""
    docs = []
    for _ in range(n):
        tags = list(rng.choice(TOY_TAGS, size=int(rng.integers(1, 3)), replace=False))
        words = [str(rng.choice(TOY_WORDS[t])) for t in tags for _ in range(6)]
        words += [str(rng.choice(FILLER)) for _ in range(8)] + ["zzunknown"]
        rng.shuffle(words)
        docs.append((words, [str(t) for t in tags]))
    return docs


def write_toy_workspace(out_dir, seed: int = 0, n_images: int = 20, n_icons: int = 24,
                        n_docs: int = 200, dim: int = 32) -> dict:
    """Lay out every input the CLI needs under ``out_dir`` and return the paths.

    ``corpus/`` PNG pages, ``icons.jsonl`` manifest, ``embeddings.txt``,
    ``vocab.txt`` and ``train.jsonl`` (``{words, tags}`` per line).
    """
    from pathlib import Path

    from . import imaging
    from .jsonl import write_jsonl
    from .synthgen import write_icon_manifest

    out = Path(out_dir)
    rng = np.random.default_rng(seed)
    (out / "corpus").mkdir(parents=True, exist_ok=True)
    for name, img in toy_corpus(rng, n_images).items():
        imaging.save_image(img, out / "corpus" / f"{name}.png")
    icons = write_icon_manifest(toy_icons(rng, n_icons), out)
    table = toy_embeddings(rng, dim)
    table.save(out / "embeddings.txt")
    (out / "vocab.txt").write_text("\n".join(TOY_TAGS) + "\n")
    write_jsonl(out / "train.jsonl", [{"words": w, "tags": t} for w, t in toy_documents(rng, n_docs)])
    return {
        "corpus": out / "corpus", "icons": icons, "embeddings": out / "embeddings.txt",
        "vocab": out / "vocab.txt", "train": out / "train.jsonl",
    }
