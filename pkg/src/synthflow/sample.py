"""Container for one generated training sample."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True, eq=False)
class Sample:
    """Two frames, ground-truth flow and occlusion for one scene.

    ``frame1``/``frame2`` are ``(H, W, 3)`` floats in [0, 1]; ``flow`` is
    ``(H, W, 2)`` pixels (u, v); ``occ`` is ``(H, W)`` bool. ``valid`` is
    ``None`` until a geometric augmentation marks pixels without source data.
    ``labels`` holds the frame-1 layer index per pixel (-1 = background).
    """

    frame1: np.ndarray
    frame2: np.ndarray
    flow: np.ndarray
    occ: np.ndarray
    valid: np.ndarray | None = None
    labels: np.ndarray | None = None
    index: int = -1

    @property
    def width(self):
        return self.frame1.shape[1]

    @property
    def height(self):
        return self.frame1.shape[0]

    def __iter__(self):
        # unpacks as (frame1, frame2, flow, occ)
        return iter((self.frame1, self.frame2, self.flow, self.occ))

    def replace(self, **changes):
        return replace(self, **changes)
