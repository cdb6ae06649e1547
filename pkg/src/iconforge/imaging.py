"""Pixel-level primitives shared by the generator, tiler and proposer.

Images are ``numpy.uint8`` arrays of shape ``(height, width, channels)`` with
3 (RGB) or 4 (RGBA) channels.  Grayscale images are 2-D ``(height, width)``.
Every function here is pure.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

CANNY_LOW = 50.0
CANNY_HIGH = 150.0
SIGMA_FRAC = 0.33

_LUMA = np.array([0.299, 0.587, 0.114])


def check_image(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.dtype != np.uint8:
        raise TypeError(f"expected uint8 pixels, got {img.dtype}")
    if img.ndim != 3 or img.shape[2] not in (3, 4):
        raise ValueError(f"expected (H, W, 3|4) image, got shape {img.shape}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError("image must be at least 1x1")
    return img


def _round_u8(values: np.ndarray) -> np.ndarray:
    # round half up, not numpy's half-to-even
    return np.clip(np.floor(values + 0.5), 0, 255).astype(np.uint8)


def to_grayscale(img: np.ndarray) -> np.ndarray:
    """Rec. 601 luma as a 2-D uint8 array. Alpha is ignored."""
    if img.ndim == 2:
        return img
    img = check_image(img)
    return _round_u8(img[..., :3].astype(np.float64) @ _LUMA)


def _gaussian_kernel_1d(size: int = 5, sigma: float = 1.4) -> np.ndarray:
    r = np.arange(size) - (size - 1) / 2
    k = np.exp(-(r**2) / (2 * sigma**2))
    return k / k.sum()


_BLUR = _gaussian_kernel_1d()


def _non_max_suppression(mag: np.ndarray, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    angle = np.degrees(np.arctan2(gy, gx)) % 180.0
    p = np.pad(mag, 1)
    h, w = mag.shape

    def at(di, dj):
        return p[1 + di:1 + di + h, 1 + dj:1 + dj + w]

    # (back, forward) neighbour offsets per quantised gradient direction
    dirs = {
        0: ((0, -1), (0, 1)),
        45: ((-1, -1), (1, 1)),
        90: ((-1, 0), (1, 0)),
        135: ((-1, 1), (1, -1)),
    }
    q = np.full(mag.shape, 0)
    q[(angle >= 22.5) & (angle < 67.5)] = 45
    q[(angle >= 67.5) & (angle < 112.5)] = 90
    q[(angle >= 112.5) & (angle < 157.5)] = 135

    keep = np.zeros(mag.shape, dtype=bool)
    for d, (back, fwd) in dirs.items():
        # strict against one side, non-strict against the other, so a
        # plateau two pixels wide thins to a single pixel
        keep |= (q == d) & (mag > at(*back)) & (mag >= at(*fwd))
    return np.where(keep & (mag > 0), mag, 0.0)


def canny(img: np.ndarray, low: float = CANNY_LOW, high: float = CANNY_HIGH) -> np.ndarray:
    """Binary Canny edge map (uint8 values in {0, 1}).

    Pipeline: 5x5 Gaussian blur (sigma 1.4), Sobel gradients, non-maximum
    suppression along the gradient, hysteresis with 8-connectivity.
    Thresholds apply to the L2 magnitude of the unnormalised Sobel response.
    """
    if low >= high:
        raise ValueError(f"canny: low threshold ({low}) must be below high ({high})")
    gray = to_grayscale(img).astype(np.float64)
    blurred = ndimage.correlate1d(gray, _BLUR, axis=0, mode="reflect")
    blurred = ndimage.correlate1d(blurred, _BLUR, axis=1, mode="reflect")
    gx = ndimage.sobel(blurred, axis=1, mode="reflect")
    gy = ndimage.sobel(blurred, axis=0, mode="reflect")
    mag = np.hypot(gx, gy)
    thin = _non_max_suppression(mag, gx, gy)

    candidates = thin >= low
    strong = thin >= high
    if not strong.any():
        return np.zeros(gray.shape, dtype=np.uint8)
    labels, _ = ndimage.label(candidates, structure=np.ones((3, 3), dtype=bool))
    keep = np.unique(labels[strong])
    return np.isin(labels, keep[keep > 0]).astype(np.uint8)


def gaussian_window(w: int, h: int, sigma_frac: float = SIGMA_FRAC) -> np.ndarray:
    """Separable Gaussian weights of shape (h, w) centred at ((w-1)/2, (h-1)/2).

    Scaled so the largest weight is exactly 1, also for even sides where the
    centre falls between pixels.
    """
    if w < 1 or h < 1:
        raise ValueError("window dimensions must be >= 1")
    if sigma_frac <= 0:
        raise ValueError("sigma_frac must be positive")
    sx, sy = sigma_frac * w, sigma_frac * h
    xs = np.arange(w) - (w - 1) / 2
    ys = np.arange(h) - (h - 1) / 2
    wy = np.exp(-(ys**2) / (2 * sy**2))
    wx = np.exp(-(xs**2) / (2 * sx**2))
    return np.outer(wy / wy.max(), wx / wx.max())


def weighted_edge_density(edges: np.ndarray, sigma_frac: float = SIGMA_FRAC) -> float:
    weights = gaussian_window(edges.shape[1], edges.shape[0], sigma_frac)
    return float(np.clip((edges * weights).sum() / weights.sum(), 0.0, 1.0))


def patch_entropy(
    patch: np.ndarray,
    canny_low: float = CANNY_LOW,
    canny_high: float = CANNY_HIGH,
    sigma_frac: float = SIGMA_FRAC,
) -> float:
    """Centre-weighted edge density of ``patch`` in [0, 1].

    0 means no Canny edges at all; 1 means every pixel is an edge.
    """
    return weighted_edge_density(canny(patch, canny_low, canny_high), sigma_frac)


def color_variance(img: np.ndarray, mask: np.ndarray | None = None) -> float:
    """Population variance per RGB channel, averaged over channels."""
    rgb = img[..., :3].reshape(-1, 3).astype(np.float64)
    if mask is not None:
        rgb = rgb[mask.reshape(-1)]
    return float(rgb.var(axis=0).mean())


def opaque_mask(icon: np.ndarray) -> np.ndarray:
    if icon.shape[2] == 3:
        return np.ones(icon.shape[:2], dtype=bool)
    return icon[..., 3] > 0


def contrast_score(patch: np.ndarray, icon: np.ndarray) -> float:
    """Absolute difference between patch and icon colour variance.

    Only opaque icon pixels (alpha > 0) contribute to the icon variance.
    """
    mask = opaque_mask(icon)
    if not mask.any():
        raise ValueError("contrast_score: icon has no opaque pixels")
    return abs(color_variance(patch) - color_variance(icon, mask))


def alpha_composite(base: np.ndarray, icon: np.ndarray, x: int, y: int) -> np.ndarray:
    """Paste ``icon`` over ``base`` with its top-left corner at (x, y).

    RGB icons are treated as fully opaque.  Returns a new array.
    """
    base = check_image(base)
    icon = check_image(icon)
    ih, iw = icon.shape[:2]
    if x < 0 or y < 0 or x + iw > base.shape[1] or y + ih > base.shape[0]:
        raise ValueError(
            f"icon {iw}x{ih} at ({x}, {y}) does not fit in {base.shape[1]}x{base.shape[0]} base"
        )
    out = base.copy()
    region = out[y:y + ih, x:x + iw]
    if icon.shape[2] == 3:
        alpha = np.ones((ih, iw, 1))
    else:
        alpha = icon[..., 3:4].astype(np.float64) / 255.0
    rgb = alpha * icon[..., :3] + (1.0 - alpha) * region[..., :3]
    region[..., :3] = _round_u8(rgb)
    if base.shape[2] == 4:
        a = alpha[..., 0] * 255.0 + (1.0 - alpha[..., 0]) * region[..., 3]
        region[..., 3] = _round_u8(a)
    return out


def _axis_coords(n_in: int, n_out: int, start: float = 0.0, length: float | None = None):
    length = n_in if length is None else length
    src = start + (np.arange(n_out) + 0.5) * (length / n_out) - 0.5
    src = np.clip(src, 0, n_in - 1)
    i0 = np.floor(src).astype(np.intp)
    i1 = np.minimum(i0 + 1, n_in - 1)
    return i0, i1, src - i0


def _bilinear(src: np.ndarray, ax_y, ax_x) -> np.ndarray:
    y0, y1, fy = ax_y
    x0, x1, fx = ax_x
    fx = fx[None, :, None]
    fy = fy[:, None, None]
    top = src[y0][:, x0] * (1 - fx) + src[y0][:, x1] * fx
    bottom = src[y1][:, x0] * (1 - fx) + src[y1][:, x1] * fx
    return top * (1 - fy) + bottom * fy


def resize(img: np.ndarray, new_w: int, new_h: int) -> np.ndarray:
    """Bilinear resize with half-pixel centres. Aspect ratio is not preserved."""
    if new_w < 1 or new_h < 1:
        raise ValueError("target size must be >= 1")
    h, w = img.shape[:2]
    if (w, h) == (new_w, new_h):
        return img.copy()
    return resample_region(img, 0, 0, w, h, new_w, new_h)


def resample_region(img: np.ndarray, x: float, y: float, w: float, h: float,
                    out_w: int, out_h: int) -> np.ndarray:
    """Bilinearly sample the (possibly fractional) rectangle x, y, w, h onto an out_w x out_h grid."""
    src = img.astype(np.float64)
    if src.ndim == 2:
        src = src[..., None]
    out = _bilinear(src, _axis_coords(img.shape[0], out_h, y, h), _axis_coords(img.shape[1], out_w, x, w))
    out = _round_u8(out)
    return out[..., 0] if img.ndim == 2 else out


def resize_rgba(img: np.ndarray, new_w: int, new_h: int) -> np.ndarray:
    """Bilinear resize in premultiplied alpha, so transparent pixels do not bleed colour."""
    if img.shape[2] != 4:
        return resize(img, new_w, new_h)
    if (img.shape[1], img.shape[0]) == (new_w, new_h):
        return img.copy()
    a = img[..., 3:4].astype(np.float64) / 255.0
    prem = np.concatenate([img[..., :3] * a, img[..., 3:4].astype(np.float64)], axis=2)
    out = _bilinear(prem, _axis_coords(img.shape[0], new_h), _axis_coords(img.shape[1], new_w))
    alpha = out[..., 3:4] / 255.0
    rgb = np.divide(out[..., :3], alpha, out=np.zeros_like(out[..., :3]), where=alpha > 0)
    return _round_u8(np.concatenate([rgb, out[..., 3:4]], axis=2))


def load_image(path: str | Path, mode: str | None = None) -> np.ndarray:
    """Read a PNG/JPEG as RGB, or RGBA when the file carries transparency."""
    with Image.open(path) as im:
        if mode is None:
            has_alpha = im.mode in ("RGBA", "LA", "PA") or "transparency" in im.info
            mode = "RGBA" if has_alpha else "RGB"
        return np.asarray(im.convert(mode), dtype=np.uint8).copy()


def save_image(img: np.ndarray, path: str | Path) -> None:
    path = Path(path)
    im = Image.fromarray(img)
    if path.suffix.lower() in (".jpg", ".jpeg"):
        im.convert("RGB").save(path, quality=95)
    else:
        # fast compression; output bytes are still deterministic
        im.save(path, compress_level=1)
