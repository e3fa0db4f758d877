import dataclasses

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from synthflow.scene import GenConfig

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])


def no_deform(cfg):
    return dataclasses.replace(
        cfg,
        object_motion=dataclasses.replace(cfg.object_motion, deform=False),
        background_motion=dataclasses.replace(cfg.background_motion, deform=False),
    )


def small_config(**kw):
    base = dict(width=128, height=96, n_objects_min=3, n_objects_max=5,
                object_radius_min=10.0, object_radius_max=24.0, texture_family="plasma")
    base.update(kw)
    return GenConfig(**base)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_cfg():
    return small_config()
