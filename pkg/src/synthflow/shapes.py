"""Object shape prototypes: seeded sampling, point membership, coverage masks.

Shapes live in an object-local frame centred on the origin, measured in
pixels. Placing a shape in an image is always done through an affine
placement (local -> image).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyClassSet, ZeroArea
from .geometry import invert

BOX, POLYGON, ELLIPSE, OUTLINE, NEEDLE = "box", "polygon", "ellipse", "outline", "needle"
SHAPE_CLASSES = (BOX, POLYGON, ELLIPSE, OUTLINE, NEEDLE)
THIN_CLASSES = (OUTLINE, NEEDLE)
SUPERSAMPLE_FACTORS = (1, 2, 4, 8)


@dataclass(frozen=True)
class ShapeSpec:
    """One object prototype.

    ``vertices`` is used by box, polygon, needle and polygonal outlines;
    ``axes`` (semi-axes) and ``center`` by ellipses and elliptic outlines.
    ``holes`` are subtracted from the solid.
    """

    kind: str
    vertices: tuple | None = None
    axes: tuple | None = None
    center: tuple = (0.0, 0.0)
    holes: tuple = ()
    stroke_width: float = 0.0

    @property
    def diameter(self):
        x0, y0, x1, y1 = local_bbox(self)
        return max(x1 - x0, y1 - y0)


def _vertex_array(shape):
    return np.asarray(shape.vertices, dtype=float)


def local_bbox(shape):
    """``(xmin, ymin, xmax, ymax)`` of the shape in its local frame."""
    if shape.axes is not None:
        pad = shape.stroke_width / 2.0
        a, b = shape.axes
        cx, cy = shape.center
        return (cx - a - pad, cy - b - pad, cx + a + pad, cy + b + pad)
    v = _vertex_array(shape)
    pad = shape.stroke_width / 2.0 if shape.kind == OUTLINE else 0.0
    return (v[:, 0].min() - pad, v[:, 1].min() - pad, v[:, 0].max() + pad, v[:, 1].max() + pad)


def _polygon_area(v):
    x, y = v[:, 0], v[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def _perimeter(v):
    return float(np.sqrt(((np.roll(v, -1, axis=0) - v) ** 2).sum(axis=1)).sum())


def ellipse_perimeter(a, b):
    h = ((a - b) / (a + b)) ** 2
    return math.pi * (a + b) * (1 + 3 * h / (10 + math.sqrt(4 - 3 * h)))


def area(shape):
    """Analytic area (polygonal outlines use the perimeter·width approximation)."""
    if shape.kind == OUTLINE:
        w = shape.stroke_width
        if shape.axes is not None:
            a, b = shape.axes
            solid = math.pi * ((a + w / 2) * (b + w / 2) - (a - w / 2) * (b - w / 2))
        else:
            solid = _perimeter(_vertex_array(shape)) * w
    elif shape.axes is not None:
        solid = math.pi * shape.axes[0] * shape.axes[1]
    else:
        solid = _polygon_area(_vertex_array(shape))
    return solid - sum(area(h) for h in shape.holes)


def _in_polygon(v, x, y):
    inside = np.zeros(np.shape(x), dtype=bool)
    n = len(v)
    with np.errstate(divide="ignore", invalid="ignore"):
        for i in range(n):
            x1, y1 = v[i]
            x2, y2 = v[(i + 1) % n]
            if y1 == y2:
                continue
            crosses = (y1 > y) != (y2 > y)
            xint = (y - y1) * ((x2 - x1) / (y2 - y1)) + x1
            inside ^= crosses & (x < xint)
    return inside


def _near_polyline(v, x, y, half_width):
    near = np.zeros(np.shape(x), dtype=bool)
    hw2 = half_width * half_width
    n = len(v)
    for i in range(n):
        x1, y1 = v[i]
        x2, y2 = v[(i + 1) % n]
        ex, ey = x2 - x1, y2 - y1
        ll = ex * ex + ey * ey
        t = np.clip(((x - x1) * ex + (y - y1) * ey) / ll, 0.0, 1.0)
        dx = x - (x1 + t * ex)
        dy = y - (y1 + t * ey)
        near |= dx * dx + dy * dy <= hw2
    return near


def _in_ellipse(a, b, cx, cy, x, y):
    u = (x - cx) / a
    w = (y - cy) / b
    return u * u + w * w <= 1.0


def contains(shape, x, y):
    """Boolean membership of local points ``(x, y)`` (arrays of equal shape)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if shape.kind == OUTLINE:
        hw = shape.stroke_width / 2.0
        if shape.axes is not None:
            a, b = shape.axes
            cx, cy = shape.center
            inside = (_in_ellipse(a + hw, b + hw, cx, cy, x, y)
                      & ~_in_ellipse(a - hw, b - hw, cx, cy, x, y))
        else:
            inside = _near_polyline(_vertex_array(shape), x, y, hw)
    elif shape.axes is not None:
        inside = _in_ellipse(shape.axes[0], shape.axes[1], shape.center[0], shape.center[1], x, y)
    else:
        inside = _in_polygon(_vertex_array(shape), x, y)
    for h in shape.holes:
        inside &= ~contains(h, x, y)
    return inside


def boundary_points(shape, n=64):
    """Points sampled along the outer boundary (used for footprint bounds)."""
    if shape.axes is not None:
        a, b = shape.axes
        pad = shape.stroke_width / 2.0
        t = np.arange(n) * (2.0 * math.pi / n)
        c = np.array([math.cos(v) for v in t])
        s = np.array([math.sin(v) for v in t])
        return np.stack([shape.center[0] + (a + pad) * c, shape.center[1] + (b + pad) * s], axis=1)
    v = _vertex_array(shape)
    per_edge = max(2, n // len(v))
    t = np.arange(per_edge) / per_edge
    pts = [v[i] + t[:, None] * (v[(i + 1) % len(v)] - v[i]) for i in range(len(v))]
    return np.concatenate(pts)


def _segments_intersect(p1, p2, p3, p4):
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(p3, p4, p1)
    d2 = orient(p3, p4, p2)
    d3 = orient(p1, p2, p3)
    d4 = orient(p1, p2, p4)
    return (d1 * d2 < 0) and (d3 * d4 < 0)


def is_simple_polygon(v):
    n = len(v)
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            if _segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]):
                return False
    return True


# -- sampling --------------------------------------------------------------

def _radial_polygon(rng, radius, n_min=3, n_max=12):
    while True:
        n = int(rng.integers(n_min, n_max + 1))
        step = 2.0 * math.pi / n
        phase = rng.random() * 2.0 * math.pi
        jitter = rng.uniform(-0.4, 0.4, n) * step
        angles = phase + np.arange(n) * step + jitter
        # bounded log-normal radii
        radii = [radius * min(1.0, max(0.35, 0.75 * math.exp(z)))
                 for z in rng.normal(0.0, 0.35, n)]
        verts = tuple((float(r * math.cos(a)), float(r * math.sin(a))) for r, a in zip(radii, angles))
        v = np.asarray(verts)
        if is_simple_polygon(verts) and _polygon_area(v) > 0.1 * radius * radius:
            return verts


def _box(rng, radius):
    hw = radius * rng.uniform(0.5, 1.0)
    hh = radius * rng.uniform(0.5, 1.0)
    return ((-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh))


def _ellipse_axes(rng, radius):
    return (radius * rng.uniform(0.5, 1.0), radius * rng.uniform(0.3, 1.0))


def _needle(rng, radius):
    length = 2.0 * radius * rng.uniform(0.8, 1.0)
    width = length / rng.uniform(8.0, 24.0)
    hl, hw = length / 2.0, width / 2.0
    return ((-hl, -hw), (hl, -hw), (hl, hw), (-hl, hw))


def _outline(rng, radius):
    if rng.random() < 0.5:
        axes = _ellipse_axes(rng, radius)
        diameter = 2.0 * max(axes)
        verts = None
    else:
        verts = _radial_polygon(rng, radius)
        axes = None
        v = np.asarray(verts)
        diameter = max(np.ptp(v[:, 0]), np.ptp(v[:, 1]))
    lo = max(1.5, 0.03 * diameter)
    hi = 0.1 * diameter
    width = rng.uniform(min(lo, hi), hi)
    return ShapeSpec(OUTLINE, vertices=verts, axes=axes, stroke_width=float(width))


def _try_place_hole(rng, parent, placed, size_range, attempts=30):
    x0, y0, x1, y1 = local_bbox(parent)
    diameter = parent.diameter
    for _ in range(attempts):
        r = 0.5 * diameter * rng.uniform(*size_range)
        cx = rng.uniform(x0 + r, x1 - r) if x1 - x0 > 2 * r else 0.5 * (x0 + x1)
        cy = rng.uniform(y0 + r, y1 - r) if y1 - y0 > 2 * r else 0.5 * (y0 + y1)
        if rng.random() < 0.5:
            a, b = _ellipse_axes(rng, r)
            hole = ShapeSpec(ELLIPSE, axes=(a, b), center=(cx, cy))
        else:
            v = _radial_polygon(rng, r, n_max=8)
            hole = ShapeSpec(POLYGON, vertices=tuple((x + cx, y + cy) for x, y in v))
        # margin: an inflated copy of the hole boundary must sit inside the parent
        bp = boundary_points(hole, 96)
        inflated = (bp - (cx, cy)) * 1.2 + (cx, cy)
        solid = ShapeSpec(parent.kind, parent.vertices, parent.axes, parent.center)
        if not contains(solid, inflated[:, 0], inflated[:, 1]).all():
            continue
        if any(contains(h, inflated[:, 0], inflated[:, 1]).any()
               or contains(hole, *boundary_points(h, 96).T).any() for h in placed):
            continue
        return hole
    return None


def sample_shape(class_set, rng, radius_range=(24.0, 64.0), holes=False,
                 hole_probability=0.5, hole_count=(1, 3), hole_size=(0.1, 0.3)):
    """Draw a shape of a uniformly chosen class from ``class_set``.

    Classes are ordered canonically before drawing so that the result only
    depends on the set, not on iteration order.
    """
    classes = [c for c in SHAPE_CLASSES if c in set(class_set)]
    unknown = set(class_set) - set(SHAPE_CLASSES)
    if unknown:
        raise ValueError(f"unknown shape classes: {sorted(unknown)}")
    if not classes:
        raise EmptyClassSet("shape class set is empty")
    kind = classes[int(rng.integers(len(classes)))]
    radius = rng.uniform(*radius_range)

    if kind == BOX:
        shape = ShapeSpec(BOX, vertices=_box(rng, radius))
    elif kind == POLYGON:
        shape = ShapeSpec(POLYGON, vertices=_radial_polygon(rng, radius))
    elif kind == ELLIPSE:
        shape = ShapeSpec(ELLIPSE, axes=_ellipse_axes(rng, radius))
    elif kind == NEEDLE:
        shape = ShapeSpec(NEEDLE, vertices=_needle(rng, radius))
    else:
        shape = _outline(rng, radius)

    if holes and kind in (BOX, POLYGON, ELLIPSE) and rng.random() < hole_probability:
        n = int(rng.integers(hole_count[0], hole_count[1] + 1))
        placed = []
        for _ in range(n):
            h = _try_place_hole(rng, shape, placed, hole_size)
            if h is not None:
                placed.append(h)
        if placed:
            shape = ShapeSpec(shape.kind, shape.vertices, shape.axes, shape.center, tuple(placed))
    return shape


# -- rasterization ---------------------------------------------------------

def subsample_grid(x0, y0, x1, y1, supersample):
    """Subsample positions for the pixel block ``[x0, x1) x [y0, y1)``."""
    s = supersample
    xs = x0 + (np.arange((x1 - x0) * s) + 0.5) / s
    ys = y0 + (np.arange((y1 - y0) * s) + 0.5) / s
    return np.meshgrid(xs, ys)


def block_coverage(shape, to_local, x0, y0, x1, y1, supersample):
    """Coverage of the pixel block ``[x0, x1) x [y0, y1)``.

    ``to_local`` maps image points to the shape's local frame.
    """
    s = supersample
    gx, gy = subsample_grid(x0, y0, x1, y1, s)
    lx, ly = to_local(gx, gy)
    inside = contains(shape, lx, ly)
    counts = inside.reshape(y1 - y0, s, x1 - x0, s).sum(axis=(1, 3))
    return counts * (1.0 / (s * s))


def footprint_bbox(shape, to_image, width, height, pad=1):
    """Integer pixel bbox ``(x0, y0, x1, y1)`` of the mapped shape, clipped to the frame.

    Returns ``None`` when the footprint misses the frame.
    """
    bp = boundary_points(shape, 128)
    x0, y0, x1, y1 = local_bbox(shape)
    corners = np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    pts = np.concatenate([bp, corners])
    px, py = to_image(pts[:, 0], pts[:, 1])
    bx0 = max(0, int(math.floor(float(np.min(px)))) - pad)
    by0 = max(0, int(math.floor(float(np.min(py)))) - pad)
    bx1 = min(width, int(math.ceil(float(np.max(px)))) + pad)
    by1 = min(height, int(math.ceil(float(np.max(py)))) + pad)
    if bx0 >= bx1 or by0 >= by1:
        return None
    return bx0, by0, bx1, by1


def rasterize_mask(shape, placement, width, height, supersample=4):
    """Antialiased coverage mask (``height x width``, values in [0, 1]).

    Coverage is the fraction of the ``supersample**2`` uniformly spaced
    subsamples of each pixel that fall inside the placed shape.
    """
    if supersample not in SUPERSAMPLE_FACTORS:
        raise ValueError(f"supersample must be one of {SUPERSAMPLE_FACTORS}")
    if abs(placement.det) * area(shape) < (1.0 / supersample) ** 2:
        raise ZeroArea("placed shape is smaller than one subpixel")
    inv = invert(placement)
    mask = np.zeros((height, width))
    box = footprint_bbox(shape, placement.apply_xy, width, height)
    if box is None:
        return mask
    x0, y0, x1, y1 = box
    mask[y0:y1, x0:x1] = block_coverage(shape, inv.apply_xy, x0, y0, x1, y1, supersample)
    return mask
