"""Color and geometry augmentation with analytic flow recomposition.

Each family has a "both" switch (same change on both frames) and a
"between" switch (an extra small change applied to frame 2 only).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .geometry import Affine2, compose, invert
from .sampling import bilinear, nearest, pixel_centers

# one child stream per role, so enabling a switch never shifts another's draws
_STREAMS = ("color_both", "color_between", "geom_both", "geom_between", "noise1", "noise2")


@dataclass(frozen=True)
class AugmentMode:
    color_both: bool = False
    color_between: bool = False
    geom_both: bool = False
    geom_between: bool = False

    def __post_init__(self):
        if self.color_between and not self.color_both:
            raise ConfigError("color_between requires color_both")
        if self.geom_between and not self.geom_both:
            raise ConfigError("geom_between requires geom_both")

    @property
    def any(self):
        return self.color_both or self.geom_both


@dataclass(frozen=True)
class AugmentConfig:
    """Switches plus sampling ranges. ``shift`` is a fraction of the frame width."""

    mode: AugmentMode = field(default_factory=AugmentMode)
    brightness: float = 0.2
    contrast_min: float = 0.5
    contrast_max: float = 2.0
    channel_gain_min: float = 0.8
    channel_gain_max: float = 1.2
    noise_max: float = 0.04
    shift: float = 0.2
    rotation: float = 17.0
    scale_min: float = 0.9
    scale_max: float = 2.0
    between_fraction: float = 0.25
    flow_interp: str = "bilinear"

    def __post_init__(self):
        if not (0 < self.contrast_min <= self.contrast_max):
            raise ConfigError("contrast range must be positive and ordered")
        if not (0 < self.scale_min <= self.scale_max):
            raise ConfigError("scale range must be positive and ordered")
        if self.flow_interp not in ("bilinear", "nearest"):
            raise ConfigError("flow_interp must be 'bilinear' or 'nearest'")


@dataclass(frozen=True)
class ColorAugment:
    brightness_offset: float = 0.0
    contrast_gain: float = 1.0
    channel_gain: tuple = (1.0, 1.0, 1.0)
    noise_std: float = 0.0

    def is_identity(self):
        return (self.brightness_offset == 0.0 and self.contrast_gain == 1.0
                and tuple(self.channel_gain) == (1.0, 1.0, 1.0) and self.noise_std == 0.0)


@dataclass(frozen=True)
class GeomAugment:
    """``shared`` (G) acts on both frames; ``incremental`` (G_d) on frame 2 only."""

    shared: Affine2 = field(default_factory=Affine2)
    incremental: Affine2 = field(default_factory=Affine2)

    def is_identity(self):
        return self.shared.is_identity() and self.incremental.is_identity()


def apply_color(img, aug, rng=None):
    """``clip(contrast * (gain * img - 0.5) + 0.5 + brightness + noise)``.

    Stages at their identity value are skipped, so identity parameters return
    an exact copy.
    """
    out = np.asarray(img, dtype=float)
    touched = False
    if tuple(aug.channel_gain) != (1.0, 1.0, 1.0):
        out = out * np.asarray(aug.channel_gain, dtype=float)
        touched = True
    if aug.contrast_gain != 1.0:
        out = aug.contrast_gain * (out - 0.5) + 0.5
        touched = True
    if aug.brightness_offset != 0.0:
        out = out + aug.brightness_offset
        touched = True
    if aug.noise_std > 0.0:
        if rng is None:
            raise ValueError("noise_std > 0 needs an rng")
        out = out + aug.noise_std * rng.standard_normal(out.shape)
        touched = True
    return np.clip(out, 0.0, 1.0) if touched else out.copy()


def _log_uniform(rng, lo, hi):
    return math.exp(rng.uniform(math.log(lo), math.log(hi)))


def draw_color(rng, cfg, delta=False):
    f = cfg.between_fraction if delta else 1.0
    b = rng.uniform(-cfg.brightness * f, cfg.brightness * f)
    c = _log_uniform(rng, cfg.contrast_min ** f, cfg.contrast_max ** f) if delta else \
        _log_uniform(rng, cfg.contrast_min, cfg.contrast_max)
    if delta:
        g = tuple(1.0 + rng.uniform(f * (cfg.channel_gain_min - 1.0), f * (cfg.channel_gain_max - 1.0), 3))
    else:
        g = tuple(rng.uniform(cfg.channel_gain_min, cfg.channel_gain_max, 3))
    n = 0.0 if delta else rng.uniform(0.0, cfg.noise_max)
    return ColorAugment(float(b), float(c), tuple(float(v) for v in g), float(n))


def draw_geom(rng, cfg, width, height, delta=False):
    """Similarity about the frame center: shift, rotation (deg), scale."""
    f = cfg.between_fraction if delta else 1.0
    sx, sy = rng.uniform(-cfg.shift * f * width, cfg.shift * f * width, 2)
    rot = rng.uniform(-cfg.rotation * f, cfg.rotation * f)
    if delta:
        s = _log_uniform(rng, cfg.scale_min ** f, cfg.scale_max ** f)
    else:
        s = rng.uniform(cfg.scale_min, cfg.scale_max)
    return Affine2.similarity(float(rot), float(s), (float(sx), float(sy)),
                              (width / 2.0, height / 2.0))


def _inside(x, y, width, height):
    return (x >= 0) & (x < width) & (y >= 0) & (y < height)


def apply_geom(frame1, frame2, flow, aug, interp="bilinear"):
    """Warp both frames and recompose the flow.

    Returns ``(frame1', frame2', flow', valid)`` where ``valid`` is False
    wherever a pullback leaves its source frame.
    """
    h, w = flow.shape[:2]
    if aug.is_identity():
        return (np.array(frame1, dtype=float), np.array(frame2, dtype=float),
                np.array(flow, dtype=float), np.ones((h, w), dtype=bool))
    g = aug.shared
    total = compose(aug.incremental, g)
    g_inv = invert(g)
    total_inv = invert(total)
    x, y = pixel_centers(w, h)
    px, py = g_inv.apply_xy(x, y)
    qx, qy = total_inv.apply_xy(x, y)
    out1 = bilinear(frame1, px, py)
    out2 = bilinear(frame2, qx, qy)
    lookup = nearest if interp == "nearest" else bilinear
    f = lookup(np.asarray(flow, dtype=float), px, py)
    # total(p + f) - x, split as linear(f) + (total(p) - x) so pure
    # translations relabel the flow exactly
    if total.is_translation():
        fu, fv = f[..., 0], f[..., 1]
    else:
        fu = total.a11 * f[..., 0] + total.a12 * f[..., 1]
        fv = total.a21 * f[..., 0] + total.a22 * f[..., 1]
    tx, ty = total.apply_xy(px, py)
    new_flow = np.stack([fu + (tx - x), fv + (ty - y)], axis=-1)
    valid = _inside(px, py, w, h) & _inside(qx, qy, w, h)
    return out1, out2, new_flow, valid


def warp_occlusion(occ, flow_new, aug):
    """Carry occlusion through the shared warp; new out-of-frame targets are occluded."""
    h, w = occ.shape
    if aug.is_identity():
        return np.array(occ, dtype=bool)
    x, y = pixel_centers(w, h)
    px, py = invert(aug.shared).apply_xy(x, y)
    moved = nearest(np.asarray(occ, dtype=bool), px, py)
    gone = ~_inside(x + flow_new[..., 0], y + flow_new[..., 1], w, h)
    return moved | gone


def draw_augment(mode, rng, cfg, width, height):
    """Draw every augmentation for one sample.

    Returns ``(color1, color2_delta, geom, noise_rngs)``; disabled switches
    yield identities. All child streams are spawned regardless of the mode.
    """
    seeds = rng.integers(0, 2 ** 63, size=len(_STREAMS))
    streams = {k: np.random.default_rng(int(s)) for k, s in zip(_STREAMS, seeds)}
    color = draw_color(streams["color_both"], cfg) if mode.color_both else ColorAugment()
    delta = draw_color(streams["color_between"], cfg, delta=True) if mode.color_between else ColorAugment()
    shared = draw_geom(streams["geom_both"], cfg, width, height) if mode.geom_both else Affine2()
    inc = draw_geom(streams["geom_between"], cfg, width, height, delta=True) if mode.geom_between else Affine2()
    return color, delta, GeomAugment(shared, inc), (streams["noise1"], streams["noise2"])


def augment_sample(sample, mode, rng, config=None):
    """Apply the augmentations selected by ``mode``; geometry first, then color."""
    cfg = config or AugmentConfig(mode=mode)
    if not mode.any:
        return sample
    color, delta, geom, (n1, n2) = draw_augment(mode, rng, cfg, sample.width, sample.height)
    f1, f2, flow, occ, valid = sample.frame1, sample.frame2, sample.flow, sample.occ, sample.valid
    labels = sample.labels
    if not geom.is_identity():
        f1, f2, flow, v = apply_geom(f1, f2, sample.flow, geom, cfg.flow_interp)
        occ = warp_occlusion(sample.occ, flow, geom)
        if valid is not None:
            px, py = invert(geom.shared).apply_xy(*pixel_centers(sample.width, sample.height))
            v &= nearest(valid, px, py)
        valid = v
        labels = None
    if mode.color_both:
        f1 = apply_color(f1, color, n1)
        f2 = apply_color(f2, color, n2)
    if mode.color_between:
        f2 = apply_color(f2, delta)
    return sample.replace(frame1=f1, frame2=f2, flow=flow, occ=occ, valid=valid, labels=labels)
