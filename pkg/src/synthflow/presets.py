"""Named dataset recipes.

Shape/motion presets form a cumulative ladder: each adds one ingredient to
the previous. Texture, displacement-scale, augmentation and camera presets
vary a single axis on top of a shape/motion preset.
"""
from __future__ import annotations

import dataclasses

from .augment import AugmentConfig, AugmentMode
from .degrade import CAMERA_PROFILES
from .errors import ConfigError
from .scene import GenConfig
from .shapes import BOX, ELLIPSE, POLYGON
from .textures import CLOUDS, PHOTO, PLASMA


def _motions(cfg, translate=True, rotate=False, scale=False, deform=False):
    flags = dict(translate=translate, rotate=rotate, scale=scale, deform=deform)
    return dataclasses.replace(
        cfg,
        object_motion=dataclasses.replace(cfg.object_motion, **flags),
        background_motion=dataclasses.replace(cfg.background_motion, **flags),
    )


def _ladder():
    base = GenConfig(texture_family=PHOTO)
    out = {}
    out["boxes-translation"] = _motions(dataclasses.replace(
        base, shape_classes=(BOX,), object_rotation_max=0.0))
    out["polygons-translation"] = _motions(dataclasses.replace(base, shape_classes=(POLYGON,)))
    out["ellipses-translation"] = _motions(dataclasses.replace(base, shape_classes=(ELLIPSE,)))
    pe = dataclasses.replace(base, shape_classes=(POLYGON, ELLIPSE))
    out["polyellipses-translation"] = _motions(pe)
    out["polyellipses-rotation"] = _motions(pe, rotate=True)
    out["polyellipses-scaling"] = _motions(pe, rotate=True, scale=True)
    holes = dataclasses.replace(pe, holes=True)
    out["polyellipses-holes"] = _motions(holes, rotate=True, scale=True)
    thin = dataclasses.replace(holes, thin=True)
    out["polyellipses-thin"] = _motions(thin, rotate=True, scale=True)
    out["polyellipses-deformations"] = _motions(thin, rotate=True, scale=True, deform=True)
    return out


SHAPE_MOTION_PRESETS = tuple(_ladder())
# presets whose motions contain no rotation component
NO_ROTATION_PRESETS = SHAPE_MOTION_PRESETS[:4]
TRANSLATION_ONLY_PRESETS = SHAPE_MOTION_PRESETS[:4]

AUGMENT_MODES = {
    "aug-none": AugmentMode(),
    "aug-color": AugmentMode(color_both=True),
    "aug-color-between": AugmentMode(color_both=True, color_between=True),
    "aug-geom": AugmentMode(geom_both=True),
    "aug-geom-between": AugmentMode(geom_both=True, geom_between=True),
    "aug-color-geom": AugmentMode(color_both=True, geom_both=True),
    "aug-all": AugmentMode(True, True, True, True),
}


def _build():
    ladder = _ladder()
    presets = dict(ladder)
    thin = ladder["polyellipses-thin"]
    for fam in (PLASMA, CLOUDS, PHOTO):
        presets[f"texture-{fam}"] = dataclasses.replace(thin, texture_family=fam)
    full = GenConfig()
    presets["sintel-like"] = full
    presets["sintel-like-2x"] = full.with_scale(2.0)
    presets["sintel-like-3x"] = full.with_scale(3.0)
    for name, mode in AUGMENT_MODES.items():
        presets[name] = dataclasses.replace(thin, augment=AugmentConfig(mode=mode))
    for name, profile in CAMERA_PROFILES.items():
        if name != "none":
            presets[f"camera-{name}"] = dataclasses.replace(full, camera=profile)
    return presets


PRESETS = _build()


def preset_names():
    return tuple(PRESETS)


def get_preset(name):
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; see 'synthflow presets'") from None
