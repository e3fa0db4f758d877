"""Randomized two-frame scenes: a moving background plus z-ordered moving layers.

A dataset is a pure function of a :class:`GenConfig`; sample ``i`` is drawn
from its own generator seeded by ``sample_seed(master_seed, i)``, so samples
can be produced in any order and in parallel.
"""
from __future__ import annotations

import copy
import dataclasses
import hashlib
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .augment import AugmentConfig
from .degrade import CameraProfile
from .errors import ConfigError, NonpositiveFactor, PlacementFailure
from .geometry import Affine2, DeformField, WarpMap, chain, compose, invert, layer_motion
from .shapes import (ELLIPSE, POLYGON, SHAPE_CLASSES, SUPERSAMPLE_FACTORS, THIN_CLASSES,
                     contains, local_bbox, sample_shape)
from .textures import CLOUDS, PHOTO, PLASMA, TEXTURE_FAMILIES, load_photo_pool

MASK64 = (1 << 64) - 1
SEED_RULE = "splitmix64-v1"
OBJECT_ATLAS = 384          # side of the shared per-sample object texture
BACKGROUND_MARGIN = 1.25    # procedural background texture size / frame size
DEFORM_CAP = 0.2            # max amplitude as a fraction of the smallest grid cell
PLACEMENT_ATTEMPTS = 100


# ---------------------------------------------------------------- seeding

def splitmix64(x):
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def sample_seed(master_seed, index):
    """64-bit per-sample seed; independent of every other index."""
    return splitmix64(splitmix64(int(master_seed) & MASK64) ^ (int(index) & MASK64))


def sample_rng(master_seed, index):
    return np.random.Generator(np.random.PCG64(sample_seed(master_seed, index)))


# ---------------------------------------------------------------- distributions

@dataclass(frozen=True)
class Dist:
    """Scalar distribution: ``normal`` (zero mean, ``std``) or ``uniform`` [lo, hi)."""

    kind: str = "normal"
    std: float = 0.0
    lo: float = 0.0
    hi: float = 0.0

    def __post_init__(self):
        if self.kind not in ("normal", "uniform"):
            raise ConfigError(f"unknown distribution kind {self.kind!r}")
        if self.std < 0 or self.hi < self.lo:
            raise ConfigError("distribution parameters out of range")

    def draw(self, rng):
        # both variates are always consumed so the stream layout is kind-independent
        z = float(rng.standard_normal())
        u = float(rng.random())
        if self.kind == "normal":
            return self.std * z
        return self.lo + (self.hi - self.lo) * u

    def scaled(self, k):
        return Dist(self.kind, self.std * k, self.lo * k, self.hi * k)


@dataclass(frozen=True)
class MotionDistribution:
    """Per-layer motion: translation (px, per component), rotation (deg),
    log-scale, and deformation amplitude (px, absolute value taken)."""

    translation: Dist = field(default_factory=Dist)
    rotation: Dist = field(default_factory=Dist)
    log_scale: Dist = field(default_factory=Dist)
    deform_amplitude: Dist = field(default_factory=lambda: Dist("uniform"))
    translate: bool = True
    rotate: bool = True
    scale: bool = True
    deform: bool = True
    global_scale: float = 1.0


def scale_distribution(motion, k):
    """Multiply every magnitude parameter by ``k``; flags are kept."""
    if not k > 0:
        raise NonpositiveFactor(f"scale factor must be > 0, got {k!r}")
    if k == 1:
        return motion
    return dataclasses.replace(
        motion,
        translation=motion.translation.scaled(k),
        rotation=motion.rotation.scaled(k),
        log_scale=motion.log_scale.scaled(k),
        deform_amplitude=motion.deform_amplitude.scaled(k),
        global_scale=motion.global_scale * k,
    )


# Approximate "Sintel-like" defaults: most mass below 10 px with a tail to ~100 px.
OBJECT_MOTION = MotionDistribution(
    translation=Dist("normal", std=8.0),
    rotation=Dist("normal", std=5.0),
    log_scale=Dist("normal", std=0.05),
    deform_amplitude=Dist("uniform", lo=0.0, hi=4.0),
)
BACKGROUND_MOTION = MotionDistribution(
    translation=Dist("normal", std=6.0),
    rotation=Dist("normal", std=2.0),
    log_scale=Dist("normal", std=0.03),
    deform_amplitude=Dist("uniform", lo=0.0, hi=3.0),
)


@dataclass(frozen=True)
class MotionParams:
    """The drawn values behind one motion (after enable flags)."""

    tx: float
    ty: float
    rotation: float
    log_scale: float
    amplitude: float


def sample_motion(dist, rng, center, domain, grid):
    """Draw ``W(p) = A (p + D(p))`` with ``A`` rotating/scaling about ``center``.

    ``domain`` is ``(x0, y0, width, height)`` of the deformation grid. Every
    component is drawn even when disabled so that flags never shift the
    stream; disabled parts become identities.
    """
    tx = dist.translation.draw(rng)
    ty = dist.translation.draw(rng)
    rot = dist.rotation.draw(rng)
    ls = dist.log_scale.draw(rng)
    amp = abs(dist.deform_amplitude.draw(rng))
    x0, y0, dw, dh = domain
    gw, gh = grid
    amp = min(amp, DEFORM_CAP * min(dw / gw, dh / gh))
    field_ = DeformField.random(dw, dh, gw, gh, amp, rng, origin=(x0, y0))
    if not dist.translate:
        tx = ty = 0.0
    if not dist.rotate:
        rot = 0.0
    if not dist.scale:
        ls = 0.0
    if not dist.deform:
        amp = 0.0
    core = Affine2.similarity(rot, math.exp(ls), (0.0, 0.0), center) \
        if (rot != 0.0 or ls != 0.0) else Affine2()
    affine = compose(Affine2.translate(tx, ty), core) if (tx != 0.0 or ty != 0.0) else core
    deform = field_ if amp > 0.0 else None
    return WarpMap.from_affine(affine, deform), MotionParams(tx, ty, rot, ls, amp)


# ---------------------------------------------------------------- config

@dataclass(frozen=True)
class GenConfig:
    width: int = 512
    height: int = 384
    n_objects_min: int = 16
    n_objects_max: int = 24
    shape_classes: tuple = (POLYGON, ELLIPSE)
    thin: bool = False
    holes: bool = False
    hole_probability: float = 0.5
    hole_count_min: int = 1
    hole_count_max: int = 3
    hole_size_min: float = 0.1
    hole_size_max: float = 0.3
    object_radius_min: float = 24.0
    object_radius_max: float = 64.0
    object_scale_min: float = 0.6
    object_scale_max: float = 1.6
    object_rotation_max: float = 180.0
    background_scale_min: float = 1.0
    background_scale_max: float = 1.3
    background_rotation_max: float = 10.0
    min_visible_fraction: float = 0.25
    texture_family: str = PHOTO
    photo_dir: str = ""
    plasma_sites: int = 200
    clouds_octaves: int = 6
    deform_grid_w: int = 4
    deform_grid_h: int = 3
    supersample: int = 4
    master_seed: int = 0
    object_motion: MotionDistribution = OBJECT_MOTION
    background_motion: MotionDistribution = BACKGROUND_MOTION
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    camera: CameraProfile = field(default_factory=CameraProfile)

    def __post_init__(self):
        object.__setattr__(self, "shape_classes", tuple(sorted(set(self.shape_classes))))
        if self.width < 1 or self.height < 1:
            raise ConfigError("frame dimensions must be positive")
        if not 0 <= self.n_objects_min <= self.n_objects_max:
            raise ConfigError("need 0 <= n_objects_min <= n_objects_max")
        unknown = set(self.shape_classes) - set(SHAPE_CLASSES)
        if unknown:
            raise ConfigError(f"unknown shape classes {sorted(unknown)}")
        if self.texture_family not in TEXTURE_FAMILIES:
            raise ConfigError(f"texture_family must be one of {TEXTURE_FAMILIES}")
        if self.supersample not in SUPERSAMPLE_FACTORS:
            raise ConfigError(f"supersample must be one of {SUPERSAMPLE_FACTORS}")
        if not 0 <= self.master_seed <= MASK64:
            raise ConfigError("master_seed must be a 64-bit unsigned integer")

    @property
    def classes(self):
        """Effective class set: the listed classes plus both thin classes if ``thin``."""
        out = set(self.shape_classes)
        if self.thin:
            out |= set(THIN_CLASSES)
        return frozenset(out)

    def with_scale(self, k):
        """Both motion distributions scaled by ``k``."""
        return dataclasses.replace(
            self,
            object_motion=scale_distribution(self.object_motion, k),
            background_motion=scale_distribution(self.background_motion, k),
        )

    def to_text(self):
        return config_to_text(self)

    def hash(self):
        return config_hash(self)


def _format(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    return str(value)


def _flatten(obj, prefix=""):
    for f in dataclasses.fields(obj):
        v = getattr(obj, f.name)
        key = prefix + f.name
        if dataclasses.is_dataclass(v):
            yield from _flatten(v, key + ".")
        else:
            yield key, _format(v)


def section_to_text(obj, prefix=""):
    """Canonical ``key = value`` lines for any config dataclass."""
    lines = sorted(f"{k} = {v}" for k, v in _flatten(obj, prefix))
    return "\n".join(lines) + "\n"


def config_to_text(config):
    """Canonical form: one ``key = value`` line per field, keys sorted."""
    lines = sorted(f"{k} = {v}" for k, v in _flatten(config))
    return "\n".join(lines) + "\n"


def config_hash(config):
    return hashlib.sha256(config_to_text(config).encode("utf-8")).hexdigest()


def _parse_value(text, current, key):
    text = text.strip()
    try:
        if isinstance(current, bool):
            if text not in ("true", "false"):
                raise ValueError(text)
            return text == "true"
        if isinstance(current, int):
            return int(text, 0)
        if isinstance(current, float):
            return float(text)
        if isinstance(current, tuple):
            return tuple(sorted(t.strip() for t in text.split(",") if t.strip()))
        return text
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {text!r}") from exc


def _set_path(obj, path, text, key):
    name = path[0]
    if not dataclasses.is_dataclass(obj) or name not in {f.name for f in dataclasses.fields(obj)}:
        raise ConfigError(f"unknown config key {key!r}")
    current = getattr(obj, name)
    if len(path) == 1:
        if dataclasses.is_dataclass(current):
            raise ConfigError(f"config key {key!r} names a section, not a value")
        value = _parse_value(text, current, key)
    else:
        value = _set_path(current, path[1:], text, key)
    # unvalidated copy: coupled keys (min/max pairs) may pass through invalid states
    out = copy.copy(obj)
    object.__setattr__(out, name, value)
    return out


def _rebuild(obj):
    """Re-run every section's constructor checks, innermost first."""
    kids = {f.name: _rebuild(getattr(obj, f.name)) for f in dataclasses.fields(obj)
            if dataclasses.is_dataclass(getattr(obj, f.name))}
    return dataclasses.replace(obj, **kids)


def apply_overrides(config, items):
    """Apply ``(key, value-text)`` pairs; dotted keys reach nested sections.

    Validation runs once after all pairs, so their order does not matter.
    """
    items = list(items)
    if not items:
        return config
    for key, text in items:
        config = _set_path(config, key.strip().split("."), text, key.strip())
    try:
        return _rebuild(config)
    except (TypeError, ValueError) as exc:
        keys = ", ".join(k.strip() for k, _ in items)
        raise ConfigError(f"{exc} (after setting {keys})") from exc


def parse_lines(text):
    items = []
    for n, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected 'key = value'")
        k, v = line.split("=", 1)
        items.append((k.strip(), v.strip()))
    return items


def config_from_text(text, base=None):
    """Parse ``key = value`` lines on top of ``base`` (defaults if omitted)."""
    return apply_overrides(base or GenConfig(), parse_lines(text))


# ---------------------------------------------------------------- scene types

@dataclass(frozen=True)
class TextureRef:
    """Recipe for a texture: procedural ``(family, seed, size, param)`` or a photo index."""

    family: str
    seed: int = 0
    width: int = 0
    height: int = 0
    param: int = 0
    index: int = -1


@dataclass(frozen=True)
class Background:
    texture: TextureRef
    placement: Affine2      # texture pixel coords -> frame-1 coords
    motion: WarpMap
    params: MotionParams | None = None


@dataclass(frozen=True)
class LayerSpec:
    shape: object           # ShapeSpec
    texture: TextureRef
    tex_map: Affine2        # shape-local coords -> texture pixel coords
    placement: Affine2      # shape-local coords -> frame-1 coords
    motion: WarpMap         # own motion
    resolved: WarpMap       # layer_motion(background.motion, motion)
    params: MotionParams | None = None


@dataclass(frozen=True)
class SceneSpec:
    width: int
    height: int
    background: Background
    layers: tuple
    index: int = -1
    seed: int = 0


def make_layer(shape, texture, tex_map, placement, motion, background_motion, params=None):
    return LayerSpec(shape, texture, tex_map, placement, motion,
                     layer_motion(background_motion, motion), params)


@lru_cache(maxsize=4)
def _photo_sizes(photo_dir):
    return tuple((t.width, t.height) for t in load_photo_pool(photo_dir or None))


def visible_fraction(shape, placement, width, height, n=32):
    """Share of a grid sample of the shape's footprint that lands inside the frame."""
    x0, y0, x1, y1 = local_bbox(shape)
    for k in (n, 4 * n):
        xs = x0 + (np.arange(k) + 0.5) * ((x1 - x0) / k)
        ys = y0 + (np.arange(k) + 0.5) * ((y1 - y0) / k)
        lx, ly = np.meshgrid(xs, ys)
        m = contains(shape, lx, ly)
        if m.any():
            fx, fy = placement.apply_xy(lx[m], ly[m])
            return float(((fx >= 0) & (fx < width) & (fy >= 0) & (fy < height)).mean())
    return 0.0


def _draw_placement(rng, cfg):
    s = math.exp(rng.uniform(math.log(cfg.object_scale_min), math.log(cfg.object_scale_max)))
    rot = rng.uniform(-cfg.object_rotation_max, cfg.object_rotation_max)
    x = rng.uniform(0.0, cfg.width)
    y = rng.uniform(0.0, cfg.height)
    return Affine2.similarity(float(rot), s, (float(x), float(y)))


def _texture_ref(cfg, rng, width, height, photo_sizes):
    if cfg.texture_family == PHOTO:
        i = int(rng.integers(len(photo_sizes)))
        return TextureRef(PHOTO, index=i, width=photo_sizes[i][0], height=photo_sizes[i][1])
    seed = int(rng.integers(0, 2 ** 63))
    param = cfg.plasma_sites if cfg.texture_family == PLASMA else cfg.clouds_octaves
    return TextureRef(cfg.texture_family, seed, width, height, param)


def _background(cfg, rng, photo_sizes):
    w, h = cfg.width, cfg.height
    ref = _texture_ref(cfg, rng, math.ceil(w * BACKGROUND_MARGIN), math.ceil(h * BACKGROUND_MARGIN),
                       photo_sizes)
    rot = rng.uniform(-cfg.background_rotation_max, cfg.background_rotation_max)
    s = rng.uniform(cfg.background_scale_min, cfg.background_scale_max)
    # scale needed so the rotated texture covers the frame
    r = math.radians(rot)
    need_w = w * abs(math.cos(r)) + h * abs(math.sin(r))
    need_h = w * abs(math.sin(r)) + h * abs(math.cos(r))
    cover = max(need_w / ref.width, need_h / ref.height)
    s = s * cover
    to_center = Affine2.translate(-ref.width / 2.0, -ref.height / 2.0)
    placement = Affine2.similarity(float(rot), s, (w / 2.0, h / 2.0)).compose(to_center)
    motion, params = sample_motion(cfg.background_motion, rng, (w / 2.0, h / 2.0),
                                   (0.0, 0.0, float(w), float(h)),
                                   (cfg.deform_grid_w, cfg.deform_grid_h))
    return Background(ref, placement, motion, params)


def _footprint_domain(shape, placement):
    x0, y0, x1, y1 = local_bbox(shape)
    cx, cy = placement.apply_xy(np.array([x0, x1, x0, x1]), np.array([y0, y0, y1, y1]))
    lo_x, lo_y = float(cx.min()), float(cy.min())
    return lo_x, lo_y, max(float(cx.max()) - lo_x, 1.0), max(float(cy.max()) - lo_y, 1.0)


def sample_scene(config, sample_index, photo_sizes=None):
    """Draw the scene for ``sample_index``; a pure function of its arguments.

    ``photo_sizes`` lists ``(width, height)`` of the photo pool; it is looked up
    from ``config.photo_dir`` when omitted and the family is ``photo``.
    """
    cfg = config
    seed = sample_seed(cfg.master_seed, sample_index)
    rng = np.random.Generator(np.random.PCG64(seed))
    if cfg.texture_family == PHOTO and photo_sizes is None:
        photo_sizes = _photo_sizes(cfg.photo_dir)
    bg = _background(cfg, rng, photo_sizes)
    atlas = _texture_ref(cfg, rng, OBJECT_ATLAS, OBJECT_ATLAS, photo_sizes) \
        if cfg.texture_family != PHOTO else None
    n = int(rng.integers(cfg.n_objects_min, cfg.n_objects_max + 1))
    classes = cfg.classes
    grid = (cfg.deform_grid_w, cfg.deform_grid_h)
    layers = []
    for _ in range(n):
        shape = sample_shape(classes, rng,
                             radius_range=(cfg.object_radius_min, cfg.object_radius_max),
                             holes=cfg.holes, hole_probability=cfg.hole_probability,
                             hole_count=(cfg.hole_count_min, cfg.hole_count_max),
                             hole_size=(cfg.hole_size_min, cfg.hole_size_max))
        for _ in range(PLACEMENT_ATTEMPTS):
            placement = _draw_placement(rng, cfg)
            if visible_fraction(shape, placement, cfg.width, cfg.height) >= cfg.min_visible_fraction:
                break
        else:
            raise PlacementFailure(
                f"sample {sample_index}: no placement keeps {cfg.min_visible_fraction:.0%} "
                f"of the object in frame after {PLACEMENT_ATTEMPTS} attempts")
        ref = atlas if atlas is not None else _texture_ref(cfg, rng, 0, 0, photo_sizes)
        x0, y0, x1, y1 = local_bbox(shape)
        ox = rng.uniform(min(-x0, ref.width - x1), max(-x0, ref.width - x1))
        oy = rng.uniform(min(-y0, ref.height - y1), max(-y0, ref.height - y1))
        tex_map = Affine2.translate(float(ox), float(oy))
        center = (placement.tx, placement.ty)
        motion, params = sample_motion(cfg.object_motion, rng, center,
                                       _footprint_domain(shape, placement), grid)
        layers.append(make_layer(shape, ref, tex_map, placement, motion, bg.motion, params))
    return SceneSpec(cfg.width, cfg.height, bg, tuple(layers), int(sample_index), seed)


def conjugate_scene(scene, shared, incremental=None):
    """The scene seen through a shared warp ``G`` and a frame-2 warp ``G_d``.

    Placements become ``G ∘ P`` and motions ``G_d ∘ G ∘ M ∘ G⁻¹``, so the
    rendered ground truth equals the geometric augmentation of the original.
    """
    g = shared
    total = compose(incremental, g) if incremental is not None else g
    g_inv = invert(g)
    bg = scene.background
    bg_motion = chain(g_inv, bg.motion, total)
    new_bg = Background(bg.texture, compose(g, bg.placement), bg_motion, bg.params)
    layers = tuple(
        LayerSpec(L.shape, L.texture, L.tex_map, compose(g, L.placement),
                  chain(g_inv, L.motion, g), chain(g_inv, L.resolved, total), L.params)
        for L in scene.layers)
    return SceneSpec(scene.width, scene.height, new_bg, layers, scene.index, scene.seed)

