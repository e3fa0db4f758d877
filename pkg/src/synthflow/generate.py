"""End-to-end sample generation: scene -> render -> augmentation -> camera profile."""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .augment import augment_sample
from .degrade import apply_profile
from .raster import render_pair
from .scene import sample_scene, sample_seed
from .textures import PHOTO, load_photo_pool


@lru_cache(maxsize=4)
def photo_pool(photo_dir=""):
    """Process-wide cached pool; ``""`` selects the bundled photos."""
    return tuple(load_photo_pool(photo_dir or None))


def photos_for(config):
    return photo_pool(config.photo_dir) if config.texture_family == PHOTO else None


def generate_sample(config, index, photos=None):
    """Sample ``index`` of the dataset defined by ``config``."""
    if photos is None:
        photos = photos_for(config)
    sizes = tuple((t.width, t.height) for t in photos) if photos is not None else None
    scene = sample_scene(config, index, photo_sizes=sizes)
    sample = render_pair(scene, config.supersample, photos)
    mode = config.augment.mode
    if mode.any:
        # separate stream from the scene's so toggling augmentation leaves scenes intact
        rng = np.random.default_rng([sample_seed(config.master_seed, index), 1])
        sample = augment_sample(sample, mode, rng, config.augment)
    if config.camera.enabled:
        f1, f2, flow = apply_profile(sample.frame1, sample.frame2, sample.flow, config.camera)
        sample = sample.replace(frame1=f1, frame2=f2, flow=flow)
    return sample
