"""Camera defects: radial blur, Gaussian blur, contrast boost, Bayer mosaic/demosaic.

All kernels are plain numpy/scipy arithmetic so degraded datasets are
bit-reproducible. Degradations are photometric; ground-truth flow passes
through untouched.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ConfigError
from .sampling import bilinear, pixel_centers

BAYER_PATTERNS = ("RGGB", "BGGR", "GRBG", "GBRG")
RADIAL_TAPS = 9
_CHANNEL = {"R": 0, "G": 1, "B": 2}


@dataclass(frozen=True)
class CameraProfile:
    """Degradation recipe; the default instance is the identity."""

    radial_blur: float = 0.0
    gaussian_sigma: float = 0.0
    contrast_boost: float = 1.0
    bayer: bool = False
    bayer_pattern: str = "RGGB"

    def __post_init__(self):
        if self.radial_blur < 0 or self.gaussian_sigma < 0:
            raise ConfigError("blur strengths must be non-negative")
        if self.contrast_boost < 1.0:
            raise ConfigError("contrast_boost must be >= 1")
        if self.bayer_pattern not in BAYER_PATTERNS:
            raise ConfigError(f"bayer_pattern must be one of {BAYER_PATTERNS}")

    @property
    def enabled(self):
        return (self.radial_blur > 0 or self.gaussian_sigma > 0
                or self.contrast_boost != 1.0 or self.bayer)


# Nominal values only; the real camera's parameters were never published.
BUMBLEBEE_LIKE = CameraProfile(radial_blur=0.02, gaussian_sigma=0.8, contrast_boost=1.3)
BAYER_ONLY = CameraProfile(bayer=True, bayer_pattern="RGGB")
CAMERA_PROFILES = {"none": CameraProfile(), "bumblebee-like": BUMBLEBEE_LIKE, "bayer": BAYER_ONLY}


def radial_blur(img, strength):
    """Average of 9 bilinear taps along the ray through the image center.

    The taps span ``strength * r`` pixels centred on each pixel, ``r`` being
    its distance from the center, so blur length grows linearly outwards.
    """
    if strength < 0:
        raise ValueError("strength must be >= 0")
    img = np.asarray(img, dtype=float)
    if strength == 0:
        return img.copy()
    h, w = img.shape[:2]
    x, y = pixel_centers(w, h)
    dx = x - w / 2.0
    dy = y - h / 2.0
    base = img
    acc = np.zeros_like(img)
    half = (RADIAL_TAPS - 1) // 2
    for k in range(-half, half + 1):
        if k == 0:
            continue
        t = strength * k / (RADIAL_TAPS - 1)
        acc += bilinear(img, x + t * dx, y + t * dy) - base
    # base + mean(offsets) keeps constant regions bit-exact
    return base + acc / RADIAL_TAPS


def gaussian_blur(img, sigma):
    img = np.asarray(img, dtype=float)
    if sigma == 0:
        return img.copy()
    if img.ndim == 2:
        return ndimage.gaussian_filter(img, sigma, mode="nearest", truncate=4.0)
    return np.stack([ndimage.gaussian_filter(img[..., c], sigma, mode="nearest", truncate=4.0)
                     for c in range(img.shape[2])], axis=-1)


def contrast_boost(img, gain):
    img = np.asarray(img, dtype=float)
    if gain == 1.0:
        return img.copy()
    return np.clip(gain * (img - 0.5) + 0.5, 0.0, 1.0)


def _channel_map(pattern):
    return np.array([[_CHANNEL[pattern[0]], _CHANNEL[pattern[1]]],
                     [_CHANNEL[pattern[2]], _CHANNEL[pattern[3]]]])


def bayer_mosaic(img, pattern="RGGB"):
    """Single-channel sensor image: each pixel keeps one color per ``pattern``."""
    cmap = _channel_map(pattern)
    h, w = img.shape[:2]
    rows = np.arange(h)[:, None] % 2
    cols = np.arange(w)[None, :] % 2
    ch = cmap[rows, cols]
    return np.take_along_axis(img, ch[..., None], axis=2)[..., 0]


def bayer_demosaic(sensor, pattern="RGGB"):
    """Bilinear demosaic built from nested pairwise means (exact on constants)."""
    cmap = _channel_map(pattern)
    h, w = sensor.shape
    p = np.pad(sensor, 1, mode="reflect")  # reflection preserves the 2x2 parity
    c = p[1:-1, 1:-1]
    up, down = p[:-2, 1:-1], p[2:, 1:-1]
    left, right = p[1:-1, :-2], p[1:-1, 2:]
    horiz = 0.5 * (left + right)
    vert = 0.5 * (up + down)
    cross = 0.5 * (horiz + vert)
    diag = 0.5 * (0.5 * (p[:-2, :-2] + p[:-2, 2:]) + 0.5 * (p[2:, :-2] + p[2:, 2:]))
    out = np.empty((h, w, 3))
    for py in (0, 1):
        for px in (0, 1):
            here = cmap[py, px]
            sl = (slice(py, None, 2), slice(px, None, 2))
            for chan in range(3):
                if chan == here:
                    src = c
                elif chan == 1:
                    src = cross
                elif here == 1:
                    src = horiz if cmap[py, 1 - px] == chan else vert
                else:
                    src = diag
                out[sl + (chan,)] = src[sl]
    return out


def bayer_cycle(img, pattern="RGGB"):
    """Mosaic to a virtual sensor image and interpolate back to RGB.

    Odd dimensions are padded by replicating the last row/column; the pad is
    cropped off the result.
    """
    img = np.asarray(img, dtype=float)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError("bayer_cycle needs an RGB image")
    h, w = img.shape[:2]
    padded = np.pad(img, ((0, h % 2), (0, w % 2), (0, 0)), mode="edge")
    return bayer_demosaic(bayer_mosaic(padded, pattern), pattern)[:h, :w]


def degrade_image(img, profile):
    """Optics then sensor: radial blur, Gaussian blur, contrast, Bayer."""
    out = np.asarray(img, dtype=float)
    if profile.radial_blur > 0:
        out = radial_blur(out, profile.radial_blur)
    if profile.gaussian_sigma > 0:
        out = gaussian_blur(out, profile.gaussian_sigma)
    if profile.contrast_boost != 1.0:
        out = contrast_boost(out, profile.contrast_boost)
    if profile.bayer:
        out = bayer_cycle(out, profile.bayer_pattern)
    return out


def apply_profile(frame1, frame2, flow, profile):
    """Degrade both frames identically; ``flow`` is returned as-is."""
    if not profile.enabled:
        return frame1, frame2, flow
    return degrade_image(frame1, profile), degrade_image(frame2, profile), flow
