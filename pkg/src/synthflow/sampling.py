"""Image lookups at continuous positions (pixel centers at integer + 0.5)."""
import numpy as np


def _prepare(size, coord):
    c = np.clip(np.asarray(coord, dtype=float) - 0.5, 0.0, size - 1.0)
    i0 = np.floor(c).astype(np.intp)
    f = c - i0
    i1 = np.minimum(i0 + 1, size - 1)
    return i0, i1, f


def bilinear(img, x, y):
    """Bilinear lookup with clamp-to-edge; ``img`` is ``(H, W)`` or ``(H, W, C)``.

    Output shape is ``x.shape`` (plus the channel axis). Lookups exactly at a
    pixel center return that pixel's value bit-exactly.
    """
    h, w = img.shape[:2]
    x0, x1, fx = _prepare(w, x)
    y0, y1, fy = _prepare(h, y)
    if img.ndim == 3:
        fx = fx[..., None]
        fy = fy[..., None]
    v00 = img[y0, x0]
    v01 = img[y0, x1]
    v10 = img[y1, x0]
    v11 = img[y1, x1]
    top = v00 + fx * (v01 - v00)
    bot = v10 + fx * (v11 - v10)
    return top + fy * (bot - top)


def nearest(img, x, y):
    h, w = img.shape[:2]
    ix = np.clip(np.floor(np.asarray(x, dtype=float)).astype(np.intp), 0, w - 1)
    iy = np.clip(np.floor(np.asarray(y, dtype=float)).astype(np.intp), 0, h - 1)
    return img[iy, ix]


def pixel_centers(width, height):
    """``(x, y)`` arrays of shape ``(height, width)`` holding pixel-center coordinates."""
    xs = np.arange(width) + 0.5
    ys = np.arange(height) + 0.5
    return np.meshgrid(xs, ys)
