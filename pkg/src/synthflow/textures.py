"""Texture families: flat-cell "plasma", multi-octave "clouds", and photographs."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy.spatial import cKDTree

from .errors import DecodeFailure, EmptyPool

PLASMA, CLOUDS, PHOTO = "plasma", "clouds", "photo"
TEXTURE_FAMILIES = (PLASMA, CLOUDS, PHOTO)
PHOTO_SUFFIXES = (".png", ".ppm")
MIN_SIZE = 64

BUNDLED_PHOTOS = Path(__file__).parent / "data" / "photos"


@dataclass(frozen=True, eq=False)
class Texture:
    image: np.ndarray
    family: str
    source_id: str

    @property
    def width(self):
        return self.image.shape[1]

    @property
    def height(self):
        return self.image.shape[0]


def _check_dims(width, height):
    if width < MIN_SIZE or height < MIN_SIZE:
        raise ValueError(f"texture must be at least {MIN_SIZE}x{MIN_SIZE}, got {width}x{height}")


def _lattice_upsample(grid, width, height, spacing):
    """Bilinear upsampling of a random lattice with node spacing ``spacing`` px."""
    gx = (np.arange(width) + 0.5) / spacing
    gy = (np.arange(height) + 0.5) / spacing
    ix = np.floor(gx).astype(np.intp)
    iy = np.floor(gy).astype(np.intp)
    fx = (gx - ix)[None, :, None]
    fy = (gy - iy)[:, None, None]
    v00 = grid[iy][:, ix]
    v01 = grid[iy][:, ix + 1]
    v10 = grid[iy + 1][:, ix]
    v11 = grid[iy + 1][:, ix + 1]
    top = v00 + fx * (v01 - v00)
    bot = v10 + fx * (v11 - v10)
    return top + fy * (bot - top)


def _smooth_colors(rng, width, height, points, nodes=3):
    """Low-frequency random color ramp evaluated at ``points``."""
    grid = rng.random((nodes + 1, nodes + 1, 3))
    gx = np.clip(points[:, 0] / width * nodes, 0.0, nodes - 1e-9)
    gy = np.clip(points[:, 1] / height * nodes, 0.0, nodes - 1e-9)
    ix = np.floor(gx).astype(np.intp)
    iy = np.floor(gy).astype(np.intp)
    fx = (gx - ix)[:, None]
    fy = (gy - iy)[:, None]
    top = grid[iy, ix] + fx * (grid[iy, ix + 1] - grid[iy, ix])
    bot = grid[iy + 1, ix] + fx * (grid[iy + 1, ix + 1] - grid[iy + 1, ix])
    return top + fy * (bot - top)


def plasma_sites(width, height, rng, n_sites=200):
    """Voronoi sites at several densities.

    A sparse uniform layer yields cells near a quarter of the image width;
    compact patches of clustered sites at halving spacings down to 3 px yield
    the small cells. ``n_sites`` is the approximate budget for the patches.
    """
    big = max(width, height) / 3.0
    nx = max(1, round(width / big))
    ny = max(1, round(height / big))
    cols, rows = np.meshgrid(np.arange(nx), np.arange(ny))
    jitter = rng.uniform(0.35, 0.65, (ny, nx, 2))
    coarse = np.stack([(cols + jitter[..., 0]) * width / nx,
                       (rows + jitter[..., 1]) * height / ny], axis=-1).reshape(-1, 2)

    spacings = []
    s = big / 4.0
    while s > 3.0:
        spacings.append(s)
        s /= 2.0
    spacings.append(3.0)
    # each patch holds ~20 sites in a disk of radius 2.5 spacings
    per_patch = 20
    patches = max(1, round(n_sites / (per_patch * len(spacings))))
    # one coarse cell is kept free of patches so a large cell always survives
    keep = coarse[int(rng.integers(len(coarse)))]
    sites = [coarse]
    for s in spacings:
        for _ in range(patches):
            radius = 2.5 * s
            for _ in range(16):
                c = rng.random(2) * (width, height)
                if math.hypot(c[0] - keep[0], c[1] - keep[1]) > 0.75 * big + radius:
                    break
            r = radius * np.sqrt(rng.random(per_patch))
            t = rng.random(per_patch) * (2.0 * math.pi)
            cs = np.array([math.cos(v) for v in t])
            sn = np.array([math.sin(v) for v in t])
            sites.append(np.stack([c[0] + r * cs, c[1] + r * sn], axis=1))
    return np.concatenate(sites)


def gen_plasma(width, height, rng, n_sites=200, jitter=0.08):
    """Flat-colored Voronoi cells whose colors drift smoothly across the image."""
    _check_dims(width, height)
    sites = plasma_sites(width, height, rng, n_sites)
    colors = _smooth_colors(rng, width, height, sites)
    colors = np.clip(colors + rng.uniform(-jitter, jitter, colors.shape), 0.0, 1.0)
    xs, ys = np.meshgrid(np.arange(width) + 0.5, np.arange(height) + 0.5)
    _, label = cKDTree(sites).query(np.stack([xs.ravel(), ys.ravel()], axis=1))
    image = colors[label].reshape(height, width, 3)
    return Texture(image, PLASMA, f"plasma:{width}x{height}")


def plasma_labels(width, height, rng, n_sites=200):
    """Cell index map matching :func:`gen_plasma` for the same rng state."""
    sites = plasma_sites(width, height, rng, n_sites)
    xs, ys = np.meshgrid(np.arange(width) + 0.5, np.arange(height) + 0.5)
    _, label = cKDTree(sites).query(np.stack([xs.ravel(), ys.ravel()], axis=1))
    return label.reshape(height, width)


def gen_clouds(width, height, rng, octaves=6, persistence=0.75):
    """Sum of bilinearly upsampled random color noise over dyadic scales.

    Octave ``o`` has lattice spacing ``2 ** (octaves - 1 - o)`` px and amplitude
    ``persistence ** o``; the sum is rescaled to span [0, 1].
    """
    _check_dims(width, height)
    if not 1 <= octaves <= 10:
        raise ValueError("octaves must be in [1, 10]")
    acc = np.zeros((height, width, 3))
    amp = 1.0
    for o in range(octaves):
        spacing = float(2 ** (octaves - 1 - o))
        gw = int(math.ceil(width / spacing)) + 2
        gh = int(math.ceil(height / spacing)) + 2
        grid = rng.random((gh, gw, 3)) - 0.5
        acc += amp * _lattice_upsample(grid, width, height, spacing)
        amp *= persistence
    lo, hi = acc.min(), acc.max()
    image = (acc - lo) / (hi - lo) if hi > lo else np.zeros_like(acc)
    return Texture(np.clip(image, 0.0, 1.0), CLOUDS, f"clouds:{width}x{height}:o{octaves}")


def decode_image(path):
    """Decode an 8-bit image file to RGB floats in [0, 1]."""
    try:
        with Image.open(path) as im:
            im.load()
            rgb = np.asarray(im.convert("RGB"), dtype=np.float64)
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise DecodeFailure(path, exc) from exc
    return rgb / 255.0


def load_photo_pool(directory=None):
    """All PNG/PPM files of ``directory`` as textures, in filename order.

    ``None`` selects the small photo set bundled with the package.
    """
    directory = BUNDLED_PHOTOS if directory in (None, "") else Path(directory)
    if not directory.is_dir():
        raise EmptyPool(f"photo directory not found: {directory}")
    files = sorted(p for p in directory.iterdir()
                   if p.is_file() and p.suffix.lower() in PHOTO_SUFFIXES)
    if not files:
        raise EmptyPool(f"no PNG/PPM images in {directory}")
    pool = []
    for p in files:
        img = decode_image(p)
        if img.shape[0] < MIN_SIZE or img.shape[1] < MIN_SIZE:
            raise DecodeFailure(p, f"image smaller than {MIN_SIZE}x{MIN_SIZE}")
        pool.append(Texture(img, PHOTO, str(p)))
    return pool
