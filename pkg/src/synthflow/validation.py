"""Input checks for images and flow fields passed in from outside the package."""
from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch


def check_image(img, name="image", channels=(1, 3), atol=1e-9):
    """Return ``img`` as float64 ``(H, W)`` or ``(H, W, C)``, finite and within [0, 1]."""
    arr = np.asarray(img, dtype=float)
    if arr.ndim == 2:
        c = 1
    elif arr.ndim == 3:
        c = arr.shape[2]
    else:
        raise ValueError(f"{name}: expected (H, W) or (H, W, C), got shape {arr.shape}")
    if c not in channels:
        raise ValueError(f"{name}: {c} channels, expected one of {channels}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValueError(f"{name}: empty image")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name}: non-finite values")
    if arr.min() < -atol or arr.max() > 1.0 + atol:
        raise ValueError(f"{name}: values outside [0, 1]")
    return arr


def check_flow(flow, name="flow"):
    arr = np.asarray(flow)
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValueError(f"{name}: expected (H, W, 2), got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name}: non-finite values")
    return arr


def check_same_size(*arrays, names=None):
    sizes = [np.shape(a)[:2] for a in arrays]
    if len(set(sizes)) > 1:
        label = ", ".join(f"{n}={s}" for n, s in zip(names or range(len(sizes)), sizes))
        raise DimensionMismatch(f"size mismatch: {label}")
    return sizes[0]


def check_sample(sample):
    check_image(sample.frame1, "frame1", channels=(3,))
    check_image(sample.frame2, "frame2", channels=(3,))
    check_flow(sample.flow)
    check_same_size(sample.frame1, sample.frame2, sample.flow, sample.occ,
                    names=("frame1", "frame2", "flow", "occ"))
    return sample
