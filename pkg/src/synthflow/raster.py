"""Render a scene into two frames, ground-truth flow and an occlusion mask.

Frames composite antialiased layers (coverage from a uniform subsample grid)
over the background. Flow labels are crisp: each pixel takes the motion of
the topmost layer whose frame-1 coverage exceeds 0.5.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import MissingTexture
from .geometry import displacement, invert
from .sample import Sample
from .sampling import bilinear, pixel_centers
from .shapes import block_coverage, contains, footprint_bbox
from .textures import CLOUDS, PHOTO, PLASMA, gen_clouds, gen_plasma

BACKGROUND = -1
BBOX_PAD = 2


@lru_cache(maxsize=8)
def _procedural(ref):
    rng = np.random.default_rng(ref.seed)
    if ref.family == PLASMA:
        img = gen_plasma(ref.width, ref.height, rng, n_sites=ref.param).image
    elif ref.family == CLOUDS:
        img = gen_clouds(ref.width, ref.height, rng, octaves=ref.param).image
    else:
        raise MissingTexture(f"unknown texture family {ref.family!r}")
    img.setflags(write=False)
    return img


def resolve_texture(ref, photos=None):
    """Pixels for a texture reference; photos come from the given pool."""
    if ref.family != PHOTO:
        return _procedural(ref)
    if photos is None or not 0 <= ref.index < len(photos):
        raise MissingTexture(f"photo #{ref.index} is not in the supplied pool")
    tex = photos[ref.index]
    img = getattr(tex, "image", tex)
    if img.shape[1] != ref.width or img.shape[0] != ref.height:
        raise MissingTexture(f"photo #{ref.index} has size {img.shape[1]}x{img.shape[0]}, "
                             f"scene expects {ref.width}x{ref.height}")
    return img


class _LayerView:
    """Mappings between frame coordinates and a layer's local coordinates."""

    def __init__(self, layer, frame):
        self.layer = layer
        self.inv_placement = invert(layer.placement)
        self.moved = frame == 2 and not layer.resolved.is_identity()

    def to_local(self, x, y):
        if self.moved:
            x, y = self.layer.resolved.inverse_xy(x, y)
        return self.inv_placement.apply_xy(x, y)

    def to_image(self, x, y):
        x, y = self.layer.placement.apply_xy(x, y)
        if self.moved:
            x, y = self.layer.resolved(x, y)
        return x, y


def lattice_coverage(shape, to_local, x0, y0, x1, y1, supersample):
    """Like :func:`block_coverage`, but ``to_local`` is evaluated only at pixel
    corners and bilinearly interpolated to the subsamples.

    Used for deformed frame-2 warps, whose inverse is iterative; the position
    error is second order in the pixel size (a few thousandths of a pixel for
    the deformation amplitudes drawn here).
    """
    s = supersample
    cx, cy = np.meshgrid(np.arange(x0, x1 + 1, dtype=float), np.arange(y0, y1 + 1, dtype=float))
    lx, ly = to_local(cx, cy)
    a = (np.arange(s) + 0.5) / s

    def interp(c):
        top = c[:-1, None, :-1, None] * (1.0 - a) + c[:-1, None, 1:, None] * a
        bot = c[1:, None, :-1, None] * (1.0 - a) + c[1:, None, 1:, None] * a
        b = a[None, :, None, None]
        return top * (1.0 - b) + bot * b

    inside = contains(shape, interp(lx), interp(ly))
    return inside.sum(axis=(1, 3)) * (1.0 / (s * s))


def _render_background(scene, frame, photos):
    bg = scene.background
    tex = resolve_texture(bg.texture, photos)
    x, y = pixel_centers(scene.width, scene.height)
    if frame == 2 and not bg.motion.is_identity():
        x, y = bg.motion.inverse_xy(x, y)
    tx, ty = invert(bg.placement).apply_xy(x, y)
    return bilinear(tex, tx, ty)


def render_frame(scene, frame, supersample=4, photos=None, want_labels=False):
    """Composite one frame (1 or 2). Returns ``(image, labels, boxes)``.

    ``boxes[i]`` is the pixel bbox of layer ``i`` in this frame (or ``None``).
    """
    img = _render_background(scene, frame, photos)
    labels = np.full((scene.height, scene.width), BACKGROUND, dtype=np.int32) if want_labels else None
    boxes = []
    for i, layer in enumerate(scene.layers):
        view = _LayerView(layer, frame)
        box = footprint_bbox(layer.shape, view.to_image, scene.width, scene.height, pad=BBOX_PAD)
        boxes.append(box)
        if box is None:
            continue
        x0, y0, x1, y1 = box
        cover = lattice_coverage if view.moved and not layer.resolved.is_affine() else block_coverage
        cov = cover(layer.shape, view.to_local, x0, y0, x1, y1, supersample)
        hit = cov > 0
        if not hit.any():
            continue
        tex = resolve_texture(layer.texture, photos)
        cx, cy = pixel_centers(x1 - x0, y1 - y0)
        lx, ly = view.to_local(cx[hit] + x0, cy[hit] + y0)
        tx, ty = layer.tex_map.apply_xy(lx, ly)
        color = bilinear(tex, tx, ty)
        c = cov[hit][:, None]
        block = img[y0:y1, x0:x1]
        block[hit] = block[hit] * (1.0 - c) + color * c
        if labels is not None:
            labels[y0:y1, x0:x1][cov > 0.5] = i
    return img, labels, boxes


def label_map(scene, supersample=4):
    """Frame-1 flow labels: topmost layer with coverage > 0.5, else ``BACKGROUND``."""
    labels = np.full((scene.height, scene.width), BACKGROUND, dtype=np.int32)
    for i, layer in enumerate(scene.layers):
        view = _LayerView(layer, 1)
        box = footprint_bbox(layer.shape, view.to_image, scene.width, scene.height, pad=BBOX_PAD)
        if box is None:
            continue
        x0, y0, x1, y1 = box
        cov = block_coverage(layer.shape, view.to_local, x0, y0, x1, y1, supersample)
        labels[y0:y1, x0:x1][cov > 0.5] = i
    return labels


def topmost_layer(scene, p, supersample=4):
    """Index of the highest layer covering more than half of the pixel containing ``p``."""
    ix, iy = int(np.floor(p[0])), int(np.floor(p[1]))
    for i in range(len(scene.layers) - 1, -1, -1):
        layer = scene.layers[i]
        cov = block_coverage(layer.shape, invert(layer.placement).apply_xy,
                             ix, iy, ix + 1, iy + 1, supersample)
        if cov[0, 0] > 0.5:
            return i
    return BACKGROUND


def flow_from_labels(scene, labels):
    """Per-pixel ``W(p) - p`` using each pixel's labelled motion."""
    x, y = pixel_centers(scene.width, scene.height)
    flow = np.zeros((scene.height, scene.width, 2))
    motions = [scene.background.motion] + [L.resolved for L in scene.layers]
    for k in np.unique(labels):
        m = motions[k + 1]
        if m.is_identity():
            continue
        sel = labels == k
        px, py = x[sel], y[sel]
        flow[sel, 0], flow[sel, 1] = displacement(m, px, py)
    return flow


def occlusion(scene, labels, flow, boxes2):
    """True where the frame-1 point leaves the frame or ends under a higher layer."""
    h, w = labels.shape
    x, y = pixel_centers(w, h)
    qx = x + flow[..., 0]
    qy = y + flow[..., 1]
    occ = ~((qx >= 0) & (qx < w) & (qy >= 0) & (qy < h))
    motions = [scene.background.motion] + [L.resolved for L in scene.layers]
    for j, layer in enumerate(scene.layers):
        box = boxes2[j]
        if box is None:
            continue
        x0, y0, x1, y1 = box
        cand = (~occ & (labels < j) & (qx >= x0) & (qx < x1) & (qy >= y0) & (qy < y1))
        # layers sharing a warp keep their frame-1 stacking; the label already decided
        for k in np.unique(labels[cand]):
            if motions[k + 1] == layer.resolved:
                cand &= labels != k
        if not cand.any():
            continue
        lx, ly = _LayerView(layer, 2).to_local(qx[cand], qy[cand])
        occ[cand] = contains(layer.shape, lx, ly)
    return occ


def render_pair(scene, supersample=4, photos=None):
    """Both frames, crisp GT flow and occlusion for ``scene``."""
    frame1, labels, _ = render_frame(scene, 1, supersample, photos, want_labels=True)
    frame2, _, boxes2 = render_frame(scene, 2, supersample, photos)
    flow = flow_from_labels(scene, labels)
    occ = occlusion(scene, labels, flow, boxes2)
    return Sample(frame1, frame2, flow, occ, labels=labels, index=scene.index)
