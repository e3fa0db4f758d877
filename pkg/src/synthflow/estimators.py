"""scikit-learn style wrappers.

``SceneGenerator`` is fit on nothing (it resolves its config) and transforms
sample indices into samples; ``Augmenter`` and ``CameraDegrader`` transform
lists of samples. They compose in a :class:`sklearn.pipeline.Pipeline`.
"""
from __future__ import annotations

import dataclasses

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .augment import AugmentConfig, AugmentMode, augment_sample
from .degrade import CameraProfile, apply_profile
from .generate import generate_sample, photos_for
from .presets import get_preset
from .scene import GenConfig, apply_overrides, sample_seed
from .validation import check_sample


class SceneGenerator(BaseEstimator, TransformerMixin):
    """Indices in, samples out.

    Parameters
    ----------
    preset : name of a shipped preset, or None for defaults.
    overrides : dict of dotted config keys to value strings.
    master_seed : overrides the config's seed when given.
    """

    def __init__(self, preset=None, overrides=None, master_seed=None):
        self.preset = preset
        self.overrides = overrides
        self.master_seed = master_seed

    def fit(self, X=None, y=None):
        cfg = get_preset(self.preset) if self.preset else GenConfig()
        if self.overrides:
            cfg = apply_overrides(cfg, sorted((k, str(v)) for k, v in self.overrides.items()))
        if self.master_seed is not None:
            cfg = dataclasses.replace(cfg, master_seed=int(self.master_seed))
        self.config_ = cfg
        self.config_hash_ = cfg.hash()
        self.photos_ = photos_for(cfg)
        return self

    def transform(self, X):
        check_is_fitted(self, "config_")
        idx = np.asarray(X).ravel()
        return [generate_sample(self.config_, int(i), self.photos_) for i in idx]


class Augmenter(BaseEstimator, TransformerMixin):
    """Color/geometry augmentation; each sample's draws depend on (seed, sample.index)."""

    def __init__(self, color_both=False, color_between=False, geom_both=False,
                 geom_between=False, seed=0, flow_interp="bilinear"):
        self.color_both = color_both
        self.color_between = color_between
        self.geom_both = geom_both
        self.geom_between = geom_between
        self.seed = seed
        self.flow_interp = flow_interp

    def fit(self, X=None, y=None):
        mode = AugmentMode(self.color_both, self.color_between, self.geom_both, self.geom_between)
        self.config_ = AugmentConfig(mode=mode, flow_interp=self.flow_interp)
        return self

    def transform(self, X):
        check_is_fitted(self, "config_")
        out = []
        for s in X:
            check_sample(s)
            rng = np.random.default_rng([sample_seed(self.seed, max(s.index, 0)), 1])
            out.append(augment_sample(s, self.config_.mode, rng, self.config_))
        return out


class CameraDegrader(BaseEstimator, TransformerMixin):
    def __init__(self, radial_blur=0.0, gaussian_sigma=0.0, contrast_boost=1.0,
                 bayer=False, bayer_pattern="RGGB"):
        self.radial_blur = radial_blur
        self.gaussian_sigma = gaussian_sigma
        self.contrast_boost = contrast_boost
        self.bayer = bayer
        self.bayer_pattern = bayer_pattern

    def fit(self, X=None, y=None):
        self.profile_ = CameraProfile(float(self.radial_blur), float(self.gaussian_sigma),
                                      float(self.contrast_boost), bool(self.bayer), self.bayer_pattern)
        return self

    def transform(self, X):
        check_is_fitted(self, "profile_")
        out = []
        for s in X:
            check_sample(s)
            f1, f2, flow = apply_profile(s.frame1, s.frame2, s.flow, self.profile_)
            out.append(s.replace(frame1=f1, frame2=f2, flow=flow))
        return out
