import dataclasses

import numpy as np
import pytest

from synthflow.errors import MissingTexture
from synthflow.geometry import Affine2, WarpMap, flow_at, invert
from synthflow.raster import BACKGROUND, render_pair, resolve_texture, topmost_layer
from synthflow.sampling import bilinear, pixel_centers
from synthflow.scene import Background, SceneSpec, TextureRef, make_layer, sample_scene
from synthflow.shapes import BOX, ShapeSpec, block_coverage
from synthflow.textures import PHOTO, PLASMA

from conftest import no_deform, small_config
from helpers import warp_mae

W, H = 96, 64
BG_TEX = TextureRef(PLASMA, 3, 128, 96, 200)
OBJ_TEX = TextureRef(PLASMA, 4, 128, 128, 200)
STILL = WarpMap.identity()


def box(hw, hh):
    return ShapeSpec(BOX, vertices=((-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh)))


def scene(layers, bg_motion=STILL):
    bg = Background(BG_TEX, Affine2.translate(-10, -10), bg_motion)
    built = tuple(make_layer(shape, OBJ_TEX, Affine2.translate(64, 64), placement, motion, bg_motion)
                  for shape, placement, motion in layers)
    return SceneSpec(W, H, bg, built)


def test_identity_motion_bit_exact():
    cfg = small_config()
    off = dict(translate=False, rotate=False, scale=False, deform=False)
    cfg = dataclasses.replace(cfg, object_motion=dataclasses.replace(cfg.object_motion, **off),
                              background_motion=dataclasses.replace(cfg.background_motion, **off))
    for i in range(3):
        s = render_pair(sample_scene(cfg, i))
        assert np.array_equal(s.frame1, s.frame2)
        assert not s.flow.any()
        assert not s.occ.any()


def test_translating_layer_flow():
    s = render_pair(scene([(box(10, 8), Affine2.translate(40, 30),
                            WarpMap.from_affine(Affine2.translate(3, 4)))]))
    inside = s.labels == 0
    assert inside.sum() == 20 * 16
    assert np.all(s.flow[inside] == [3.0, 4.0])
    assert np.all(s.flow[~inside] == 0.0)


def test_topmost_layer_cases():
    sc = scene([(box(10, 10), Affine2.translate(30, 30), STILL),
                (box(6, 6), Affine2.translate(32, 32), STILL)])
    assert topmost_layer(sc, (80.5, 5.5)) == BACKGROUND
    assert topmost_layer(sc, (32.5, 32.5)) == 1
    assert topmost_layer(sc, (22.5, 22.5)) == 0


@pytest.mark.parametrize("frac", [0.25, 0.5, 0.75, 1.0])
def test_label_flips_at_half_coverage(frac):
    # right edge of the box sits at x = 50 + frac: pixel column 50 has coverage frac
    sc = scene([(box(10, 10), Affine2.translate(40 + frac, 30), STILL)])
    cov = block_coverage(box(10, 10), invert(sc.layers[0].placement).apply_xy, 50, 30, 51, 31, 4)
    assert cov[0, 0] == frac
    expect = 0 if frac > 0.5 else BACKGROUND
    assert topmost_layer(sc, (50.5, 30.5)) == expect
    assert render_pair(sc).labels[30, 50] == expect


def test_color_and_flow_consistency():
    cfg = no_deform(small_config())
    sc = sample_scene(cfg, 2)
    s = render_pair(sc)
    top = len(sc.layers) - 1
    L = sc.layers[top]
    cov = block_coverage(L.shape, invert(L.placement).apply_xy, 0, 0, sc.width, sc.height, 4)
    full = cov == 1.0
    assert full.sum() > 20
    x, y = pixel_centers(sc.width, sc.height)
    lx, ly = invert(L.placement).apply_xy(x[full], y[full])
    tx, ty = L.tex_map.apply_xy(lx, ly)
    color = bilinear(resolve_texture(L.texture), tx, ty)
    assert np.array_equal(s.frame1[full], color)
    assert np.all(s.labels[full] == top)
    ref = flow_at(L.resolved, np.stack([x[full], y[full]], -1))
    assert np.array_equal(s.flow[full], ref)


def test_occlusion_two_layers():
    # layer 0 still; layer 1 slides 12 px right, over part of layer 0
    lower = (box(10, 10), Affine2.translate(50, 32), STILL)
    upper = (box(6, 6), Affine2.translate(30, 32), WarpMap.from_affine(Affine2.translate(12, 0)))
    s = render_pair(scene([lower, upper]))
    x, y = pixel_centers(W, H)
    # oracle: frame-2 square of layer 1 is [36, 48] x [26, 38]
    covered2 = (x > 36) & (x < 48) & (y > 26) & (y < 38)
    expect = (s.labels == 0) & covered2
    assert expect.sum() > 0
    assert np.array_equal(s.occ & (s.labels == 0), expect)
    # the moving layer itself and the static background it uncovers stay visible
    assert not s.occ[s.labels == 1].any()


def test_out_of_frame_occluded():
    s = render_pair(scene([], WarpMap.from_affine(Affine2.translate(20, 0))))
    x, _ = pixel_centers(W, H)
    assert np.array_equal(s.occ, x + 20 >= W)
    assert np.all(s.flow == [20.0, 0.0])


def test_missing_texture():
    bg = Background(TextureRef(PHOTO, index=0, width=100, height=100),
                    Affine2.identity(), STILL)
    sc = SceneSpec(W, H, bg, ())
    with pytest.raises(MissingTexture):
        render_pair(sc)
    with pytest.raises(MissingTexture):
        render_pair(sc, photos=[np.zeros((50, 50, 3))])
    render_pair(sc, photos=[np.zeros((100, 100, 3))])


def test_flow_finite_and_frames_in_range():
    cfg = small_config()
    for i in range(4):
        s = render_pair(sample_scene(cfg, i))
        assert np.isfinite(s.flow).all()
        for f in (s.frame1, s.frame2):
            assert f.min() >= 0.0 and f.max() <= 1.0


def test_render_deterministic():
    cfg = small_config()
    a = render_pair(sample_scene(cfg, 9))
    b = render_pair(sample_scene(cfg, 9))
    for u, v in zip(a, b):
        assert np.array_equal(u, v)


def test_warp_consistency_small():
    cfg = no_deform(small_config(width=160, height=120))
    for i in range(5):
        s = render_pair(sample_scene(cfg, i))
        assert warp_mae(s) < 0.02


def test_warp_consistency_deformed():
    cfg = small_config(width=160, height=120)
    for i in range(3):
        s = render_pair(sample_scene(cfg, i))
        assert warp_mae(s) < 0.03
