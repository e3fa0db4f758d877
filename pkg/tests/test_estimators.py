import numpy as np
import pytest
from sklearn.base import clone
from sklearn.pipeline import Pipeline

from synthflow.degrade import BUMBLEBEE_LIKE, apply_profile
from synthflow.errors import ConfigError, DimensionMismatch
from synthflow.estimators import Augmenter, CameraDegrader, SceneGenerator
from synthflow.generate import generate_sample

SMALL = {"width": 96, "height": 64, "n_objects_min": 2, "n_objects_max": 3,
         "object_radius_min": 8, "object_radius_max": 16, "texture_family": "plasma"}


def test_params_and_clone():
    gen = SceneGenerator(preset="boxes-translation", overrides=SMALL, master_seed=4)
    assert gen.get_params() == {"preset": "boxes-translation", "overrides": SMALL, "master_seed": 4}
    twin = clone(gen)
    assert twin is not gen and twin.get_params() == gen.get_params()
    aug = Augmenter(geom_both=True, seed=2).set_params(color_both=True)
    assert clone(aug).get_params()["color_both"] is True


def test_generator_matches_direct():
    gen = SceneGenerator(overrides=SMALL, master_seed=3).fit()
    assert gen.config_.master_seed == 3 and gen.config_.width == 96
    out = gen.transform([0, 5])
    ref = generate_sample(gen.config_, 5)
    assert out[1].index == 5
    for a, b in zip(out[1], ref):
        assert np.array_equal(a, b)


def test_unfitted_raises():
    from sklearn.exceptions import NotFittedError
    with pytest.raises(NotFittedError):
        SceneGenerator().transform([0])


def test_pipeline_order_and_determinism():
    def make():
        return Pipeline([("gen", SceneGenerator(overrides=SMALL)),
                         ("aug", Augmenter(color_both=True, geom_both=True, seed=9)),
                         ("cam", CameraDegrader(radial_blur=0.02, gaussian_sigma=0.8,
                                                contrast_boost=1.3))])
    a = make().fit_transform([1, 2])
    b = clone(make()).fit_transform([1, 2])
    assert len(a) == 2
    for s, t in zip(a, b):
        assert s.valid is not None
        for u, v in zip(s, t):
            assert np.array_equal(u, v)


def test_degrader_matches_profile():
    s = SceneGenerator(overrides=SMALL).fit().transform([0])[0]
    out = CameraDegrader(0.02, 0.8, 1.3).fit().transform([s])[0]
    f1, f2, flow = apply_profile(s.frame1, s.frame2, s.flow, BUMBLEBEE_LIKE)
    assert np.array_equal(out.frame1, f1) and np.array_equal(out.frame2, f2)
    assert out.flow is s.flow


def test_augmenter_seed_per_index():
    s0, s1 = SceneGenerator(overrides=SMALL).fit().transform([0, 1])
    aug = Augmenter(color_both=True, seed=1).fit()
    a = aug.transform([s0])[0]
    b = aug.transform([s1, s0])[1]
    assert np.array_equal(a.frame1, b.frame1)


def test_input_validation():
    s = SceneGenerator(overrides=SMALL).fit().transform([0])[0]
    with pytest.raises(ValueError):
        CameraDegrader().fit().transform([s.replace(frame1=s.frame1 * 2)])
    with pytest.raises(ValueError):
        Augmenter().fit().transform([s.replace(flow=s.flow[..., :1])])
    with pytest.raises(DimensionMismatch):
        Augmenter().fit().transform([s.replace(occ=s.occ[:-1])])
    with pytest.raises(ConfigError):
        Augmenter(color_between=True).fit()
    with pytest.raises(ConfigError):
        CameraDegrader(bayer_pattern="XXXX").fit()
