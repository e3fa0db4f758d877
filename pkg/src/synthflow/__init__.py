"""Procedural two-frame optical-flow datasets with exact ground truth."""

__version__ = "0.1.0"

from .errors import SynthFlowError  # noqa: E402
from .generate import generate_sample  # noqa: E402
from .presets import get_preset, preset_names  # noqa: E402
from .scene import GenConfig, config_from_text, sample_scene  # noqa: E402

__all__ = ["GenConfig", "SynthFlowError", "config_from_text", "generate_sample",
           "get_preset", "preset_names", "sample_scene", "__version__"]
