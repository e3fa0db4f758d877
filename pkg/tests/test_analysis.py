import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from synthflow.analysis import (DEFAULT_RANGES, DisplacementHistogram, EpeAccumulator,
                                compare_histograms, default_edges, displacement_histogram, epe,
                                epe_csv_header, epe_csv_row, ks_distance)
from synthflow.errors import DimensionMismatch, EdgeMismatch
from synthflow.generate import generate_sample

from conftest import small_config

finite = st.floats(-300, 300, allow_nan=False, width=32)


def field_pairs():
    shape = st.tuples(st.integers(1, 12), st.integers(1, 12)).map(lambda s: s + (2,))
    return shape.flatmap(lambda s: st.tuples(arrays(np.float64, s, elements=finite),
                                             arrays(np.float64, s, elements=finite)))


def test_zero_error(rng):
    gt = rng.normal(0, 20, (30, 40, 2))
    r = epe(gt, gt)
    assert r.total_epe == 0.0 and all(p == 0.0 for p in r.partial)


def test_three_four_five(rng):
    gt = rng.normal(0, 50, (384, 512, 2))
    r = epe(gt + np.array([3.0, 4.0]), gt)
    assert r.total_epe == 5.0
    assert r.pixel_count == 384 * 512


@given(field_pairs())
def test_partial_closure(pair):
    est, gt = pair
    r = epe(est, gt)
    assert math.isclose(sum(r.partial), r.total_epe, rel_tol=1e-6, abs_tol=1e-12)


@given(field_pairs(), st.integers(0, 2 ** 32 - 1))
@settings(max_examples=30)
def test_permutation_invariance(pair, seed):
    est, gt = pair
    h, w = gt.shape[:2]
    perm = np.random.default_rng(seed).permutation(h * w)
    a = epe(est, gt)
    b = epe(est.reshape(-1, 1, 2)[perm], gt.reshape(-1, 1, 2)[perm])
    assert math.isclose(a.total_epe, b.total_epe, rel_tol=1e-12, abs_tol=1e-12)
    for x, y in zip(a.partial, b.partial):
        assert math.isclose(x, y, rel_tol=1e-12, abs_tol=1e-12)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        epe(np.zeros((4, 5, 2)), np.zeros((5, 4, 2)))
    with pytest.raises(DimensionMismatch):
        epe(np.zeros((4, 5, 3)), np.zeros((4, 5, 3)))


def test_accumulator_matches_pooled(rng):
    pairs = [(rng.normal(0, 30, (10, 12, 2)), rng.normal(0, 60, (10, 12, 2))) for _ in range(5)]
    acc = EpeAccumulator()
    for e, g in pairs:
        acc.add(e, g)
    pooled = epe(np.concatenate([e for e, _ in pairs]), np.concatenate([g for _, g in pairs]))
    r = acc.report()
    assert math.isclose(r.total_epe, pooled.total_epe, rel_tol=1e-12)
    left, right = EpeAccumulator().add(*pairs[0]), EpeAccumulator()
    for p in pairs[1:]:
        right.add(*p)
    merged = left.merge(right).report()
    assert math.isclose(merged.total_epe, pooled.total_epe, rel_tol=1e-12)


def test_csv_row_format():
    r = epe(np.zeros((2, 2, 2)) + [3.0, 4.0], np.zeros((2, 2, 2)))
    assert epe_csv_header().split(",")[:2] == ["sample", "total_epe"]
    assert len(epe_csv_header().split(",")) == len(DEFAULT_RANGES) + 3
    assert epe_csv_row("x", r) == "x,5,5,0,0,0,4"


def test_histogram_zero_field():
    h = displacement_histogram([np.zeros((8, 8, 2))])
    assert h.counts[0] == 64 and h.counts[1:].sum() == 0


def test_histogram_constant_seven():
    f = np.zeros((6, 6, 2))
    f[..., 0] = 7.0
    h = displacement_histogram([f], [0.0, 5.0, 10.0])
    assert list(h.counts) == [0, 36]


def test_histogram_invariants(rng):
    fields = [rng.normal(0, 20, (16, 16, 2)) for _ in range(4)]
    h = displacement_histogram(fields)
    assert h.counts.sum() == h.total_pixels == 4 * 256
    assert np.all(np.diff(h.bin_edges) > 0)
    rev = displacement_histogram(fields[::-1])
    assert np.array_equal(h.counts, rev.counts)
    a = displacement_histogram(fields[:2]).merge(displacement_histogram(fields[2:]))
    assert np.array_equal(a.counts, h.counts)


def test_default_edges_and_csv():
    edges = default_edges()
    assert len(edges) == 42 and edges[0] == 0.0
    assert math.isclose(edges[1], 0.1) and math.isclose(edges[-1], 300.0)
    lines = list(displacement_histogram([np.ones((3, 3, 2))]).csv_lines())
    assert lines[0] == "bin,lo,hi,count,fraction"
    assert len(lines) == 42
    assert lines[-1].split(",")[2] == "inf"


def test_bad_edges():
    with pytest.raises(ValueError):
        DisplacementHistogram([0.0, 1.0, 1.0])


def test_compare_histograms():
    f = np.random.default_rng(0).normal(0, 10, (20, 20, 2))
    a = displacement_histogram([f])
    assert compare_histograms(a, a) == 0.0
    lo = displacement_histogram([np.zeros((4, 4, 2))], [0.0, 1.0, 2.0])
    hi = displacement_histogram([np.full((4, 4, 2), 1.0)], [0.0, 1.0, 2.0])
    assert compare_histograms(lo, hi) == 2.0
    with pytest.raises(EdgeMismatch):
        compare_histograms(lo, a)


def test_ks_scaled_edges():
    f = np.random.default_rng(1).normal(0, 10, (50, 50, 2))
    a = displacement_histogram([f])
    b = displacement_histogram([2 * f], 2 * default_edges())
    assert ks_distance(a, b) == 0.0
    with pytest.raises(EdgeMismatch):
        ks_distance(a, displacement_histogram([f], [0.0, 1.0]))


def test_shift_ordering_on_generated_data():
    base = small_config(width=160, height=120)
    hists = {}
    for k in (1, 2, 3):
        cfg = base.with_scale(k)
        hists[k] = displacement_histogram(generate_sample(cfg, i).flow for i in range(3))
    assert compare_histograms(hists[1], hists[3]) > compare_histograms(hists[1], hists[2])
