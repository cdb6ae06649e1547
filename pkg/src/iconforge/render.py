"""Overlay rendering and metric tables."""
from __future__ import annotations

import html
import logging
from typing import Sequence

import numpy as np
from PIL import Image, ImageDraw

from .boxes import BBox

log = logging.getLogger(__name__)

STYLES = {
    # name: (rgba colour, dashed, filled)
    "icon": ((220, 30, 30, 255), False, False),
    "hashtag": ((30, 60, 220, 255), False, False),
    "proposal": ((30, 60, 220, 255), True, False),
    "text": ((40, 180, 60, 90), False, True),
}
DASH = 6


def _dashed_rect(draw: ImageDraw.ImageDraw, x0, y0, x1, y1, fill, width):
    for a in range(x0, x1 + 1, 2 * DASH):
        b = min(a + DASH - 1, x1)
        draw.line([(a, y0), (b, y0)], fill=fill, width=width)
        draw.line([(a, y1), (b, y1)], fill=fill, width=width)
    for a in range(y0, y1 + 1, 2 * DASH):
        b = min(a + DASH - 1, y1)
        draw.line([(x0, a), (x0, b)], fill=fill, width=width)
        draw.line([(x1, a), (x1, b)], fill=fill, width=width)


def render_overlay(
    image: np.ndarray,
    boxes: Sequence[tuple[BBox, str | None, str]] = (),
    fade: float = 0.5,
    width: int = 2,
) -> np.ndarray:
    """Washed-out copy of ``image`` with labelled boxes.

    Each entry is ``(box, label, style)`` with style one of ``icon`` (solid
    red), ``hashtag`` (solid blue), ``proposal`` (dashed blue) or ``text``
    (translucent green fill).  Boxes leaving the image are clipped.
    """
    rgb = image[..., :3].astype(np.float64)
    faded = np.floor(rgb * (1 - fade) + 255 * fade + 0.5).astype(np.uint8)
    canvas = Image.fromarray(faded).convert("RGBA")
    layer = Image.new("RGBA", canvas.size, (0, 0, 0, 0))
    draw = ImageDraw.Draw(layer)
    h, w = image.shape[:2]
    for box, label, style in boxes:
        colour, dashed, filled = STYLES[style]
        x0, y0 = int(round(box.x)), int(round(box.y))
        x1, y1 = int(round(box.x2)) - 1, int(round(box.y2)) - 1
        if x0 < 0 or y0 < 0 or x1 >= w or y1 >= h:
            log.warning("box %s leaves the %dx%d image; clipped", box, w, h)
            x0, y0, x1, y1 = max(x0, 0), max(y0, 0), min(x1, w - 1), min(y1, h - 1)
            if x1 < x0 or y1 < y0:
                continue
        if filled:
            draw.rectangle([x0, y0, x1, y1], fill=colour)
        elif dashed:
            _dashed_rect(draw, x0, y0, x1, y1, colour, width)
        else:
            draw.rectangle([x0, y0, x1, y1], outline=colour, width=width)
        if label:
            draw.text((x0 + 2, max(0, y0 - 12)), label, fill=colour[:3] + (255,))
    return np.asarray(Image.alpha_composite(canvas, layer).convert("RGB")).copy()


def _fmt(v) -> str:
    return "-" if v is None else f"{v:.1f}"


def report_table(rows: Sequence[tuple[str, dict]], fmt: str = "md") -> str:
    """Detection rows ``Prec Rec F0.3 mAP`` or hashtag rows ``Top-1 Prec. mAP``."""
    if rows and all("top1_precision" in r for _, r in rows):
        header = ["Model", "Top-1 Prec.", "mAP"]
        body = [[name, _fmt(r["top1_precision"]), _fmt(r.get("map"))] for name, r in rows]
    else:
        header = ["Model", "Prec.", "Rec.", "F0.3", "mAP"]
        body = [
            [name, _fmt(r["precision"]), _fmt(r["recall"]), _fmt(r["f_beta"]), _fmt(r["map"])]
            for name, r in rows
        ]
    if fmt == "html":
        cells = lambda tag, row: "".join(f"<{tag}>{html.escape(c)}</{tag}>" for c in row)
        lines = ["<table>", f"<tr>{cells('th', header)}</tr>"]
        lines += [f"<tr>{cells('td', row)}</tr>" for row in body]
        lines.append("</table>")
        return "\n".join(lines) + "\n"
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    lines += ["| " + " | ".join(row) + " |" for row in body]
    return "\n".join(lines) + "\n"
