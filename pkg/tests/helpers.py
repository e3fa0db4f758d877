"""Measurement helpers shared by the unit and acceptance tests."""
import numpy as np
from scipy.ndimage import binary_dilation

from synthflow.augment import GeomAugment, apply_geom
from synthflow.geometry import invert
from synthflow.raster import render_pair
from synthflow.sampling import bilinear, pixel_centers
from synthflow.scene import conjugate_scene


def label_edges(labels):
    e = np.zeros(labels.shape, dtype=bool)
    dx = labels[:, 1:] != labels[:, :-1]
    dy = labels[1:] != labels[:-1]
    e[:, 1:] |= dx
    e[:, :-1] |= dx
    e[1:] |= dy
    e[:-1] |= dy
    return e


def grow(mask, r):
    if r <= 0:
        return mask
    return binary_dilation(mask, iterations=r)


def backward_warp_error(frame1, frame2, flow):
    h, w = flow.shape[:2]
    x, y = pixel_centers(w, h)
    warped = bilinear(frame2, x + flow[..., 0], y + flow[..., 1])
    return np.abs(warped - frame1).mean(axis=-1)


def warp_mae(sample, labels=None, dilate=1, valid=None):
    """Backward-warp MAE over non-occluded pixels, label edges grown by ``dilate`` px excluded."""
    labels = sample.labels if labels is None else labels
    err = backward_warp_error(sample.frame1, sample.frame2, sample.flow)
    bad = grow(label_edges(labels), dilate) | sample.occ
    if valid is not None:
        bad |= ~valid
    return float(err[~bad].mean())


def composition_error(scene, shared, incremental, supersample=4, band=2, photos=None):
    """Max |flow' - conjugated-scene GT| outside a ``band``-px edge band and invalid pixels."""
    s = render_pair(scene, supersample, photos)
    _, _, flow2, valid = apply_geom(s.frame1, s.frame2, s.flow, GeomAugment(shared, incremental))
    ref = render_pair(conjugate_scene(scene, shared, incremental), supersample, photos)
    h, w = s.flow.shape[:2]
    # bilinear flow lookups mix neighbours: drop pullbacks near label edges or the frame border
    near = grow(label_edges(s.labels), 1)
    border = np.zeros((h, w), dtype=bool)
    border[:1] = border[-1:] = True
    border[:, :1] = border[:, -1:] = True
    x, y = pixel_centers(w, h)
    px, py = invert(shared).apply_xy(x, y)
    ix = np.clip(np.floor(px).astype(int), 0, w - 1)
    iy = np.clip(np.floor(py).astype(int), 0, h - 1)
    src_bad = (near | border)[iy, ix]
    bad = grow(label_edges(ref.labels), band) | ~valid | src_bad
    err = np.abs(flow2 - ref.flow).max(axis=-1)
    return float(err[~bad].max()), int((~bad).sum())
