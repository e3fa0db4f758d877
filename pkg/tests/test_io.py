import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from synthflow.errors import BadHeader, BadMagic, DimensionOverflow, IoFailure, TruncatedFile
from synthflow.io import (decode_flo, decode_pfm, decode_pnm, encode_flo, encode_pfm, encode_pnm,
                          flow_files, manifest_text, parse_manifest, quantize, read_flo,
                          read_image, read_manifest, read_pfm, read_sample, sample_paths,
                          write_flo, write_image, write_manifest, write_pfm, write_sample)
from synthflow.scene import GenConfig, SEED_RULE

f32 = st.floats(width=32, allow_nan=False, allow_infinity=False)
dims = st.tuples(st.integers(1, 9), st.integers(1, 9))


def test_flo_one_pixel(tmp_path):
    p = tmp_path / "a.flo"
    write_flo(np.zeros((1, 1, 2)), p)
    data = p.read_bytes()
    # 12-byte header (magic, width, height) + one float32 pair
    assert len(data) == 20
    assert struct.unpack("<fii", data[:12]) == (202021.25, 1, 1)
    assert np.array_equal(read_flo(p), np.zeros((1, 1, 2), np.float32))


def test_flo_layout_little_endian():
    flow = np.array([[[1.0, 2.0], [3.0, 4.0]]])  # 1 row, 2 columns
    data = encode_flo(flow)
    assert struct.unpack("<fii4f", data) == (202021.25, 2, 1, 1.0, 2.0, 3.0, 4.0)


def test_flo_large_bit_exact(tmp_path):
    flow = np.random.default_rng(0).normal(0, 40, (384, 512, 2)).astype(np.float32)
    write_flo(flow, tmp_path / "f.flo")
    back = read_flo(tmp_path / "f.flo")
    assert back.dtype == np.float32 and back.tobytes() == flow.tobytes()


@given(dims.flatmap(lambda d: arrays(np.float32, d + (2,), elements=f32)))
def test_flo_round_trip_property(flow):
    assert decode_flo(encode_flo(flow)).tobytes() == flow.tobytes()


def test_flo_errors():
    good = encode_flo(np.ones((3, 4, 2)))
    with pytest.raises(BadMagic):
        decode_flo(struct.pack("<f", 0.0) + good[4:])
    with pytest.raises(TruncatedFile):
        decode_flo(good[:-1])
    with pytest.raises(TruncatedFile):
        decode_flo(good[:8])
    with pytest.raises(DimensionOverflow):
        decode_flo(good[:4] + struct.pack("<ii", 100_001, 1) + good[12:])
    with pytest.raises(DimensionOverflow):
        decode_flo(good[:4] + struct.pack("<ii", 0, 4) + good[12:])


def test_pfm_constant(tmp_path):
    write_pfm(np.ones((1, 1)), tmp_path / "a.pfm")
    data = (tmp_path / "a.pfm").read_bytes()
    assert data.startswith(b"Pf\n1 1\n-1.0\n")
    assert read_pfm(tmp_path / "a.pfm").tolist() == [[1.0]]


def test_pfm_bottom_up():
    img = np.array([[1.0, 2.0], [3.0, 4.0]], np.float32)
    data = encode_pfm(img)
    payload = np.frombuffer(data[-16:], "<f4")
    assert payload.tolist() == [3.0, 4.0, 1.0, 2.0]


def test_pfm_big_endian_read():
    img = np.array([[1.5, -2.0, 3.25]], np.float32)
    data = b"Pf\n3 1\n1.0\n" + img.astype(">f4").tobytes()
    assert np.array_equal(decode_pfm(data), img)


@given(dims.flatmap(lambda d: arrays(np.float32, d, elements=f32)))
def test_pfm_round_trip_property(img):
    assert decode_pfm(encode_pfm(img)).tobytes() == img.tobytes()


def test_pfm_errors():
    with pytest.raises(BadHeader):
        decode_pfm(b"PF\n1 1\n-1.0\n" + bytes(12))
    with pytest.raises(BadHeader):
        decode_pfm(b"P6\n1 1\n255\n" + bytes(3))
    with pytest.raises(TruncatedFile):
        decode_pfm(b"Pf\n2 2\n-1.0\n" + bytes(12))


def test_quantization_bound(rng):
    img = rng.random((37, 53, 3))
    back = decode_pnm(encode_pnm(img))
    assert np.abs(back - img).max() <= 0.5 / 255 + 1e-12


def test_quantize_half_up():
    assert quantize(np.array([0.5 / 255, 1.5 / 255, 0.0, 1.0])).tolist() == [1, 2, 0, 255]


def test_pnm_headers():
    assert encode_pnm(np.zeros((2, 3, 3))).startswith(b"P6\n3 2\n255\n")
    assert encode_pnm(np.zeros((2, 3))).startswith(b"P5\n3 2\n255\n")
    assert encode_pnm(np.array([[True, False]]))[-2:] == bytes([255, 0])
    with pytest.raises(BadHeader):
        decode_pnm(b"P3\n1 1\n255\n0 0 0")
    with pytest.raises(BadHeader):
        decode_pnm(b"P5\n1 1\n65535\n" + bytes(2))
    assert decode_pnm(b"P5\n# c\n2 1\n255\n\x00\xff").tolist() == [[0.0, 1.0]]


def test_sample_layout(tmp_path, rng):
    f1, f2 = rng.random((6, 8, 3)), rng.random((6, 8, 3))
    flow = rng.normal(0, 3, (6, 8, 2))
    occ = rng.random((6, 8)) > 0.5
    paths = write_sample(tmp_path, 7, f1, f2, flow, occ)
    assert [p.name for p in paths] == ["000007_img1.ppm", "000007_img2.ppm",
                                       "000007_flow.flo", "000007_occ.pgm"]
    s = read_sample(tmp_path, 7)
    assert np.abs(s.frame1 - f1).max() <= 0.5 / 255 + 1e-12
    assert np.array_equal(s.flow, flow.astype(np.float32))
    assert np.array_equal(s.occ, occ)
    assert set(read_image(paths[3], as_float=False).ravel()) <= {0, 255}
    before = [p.read_bytes() for p in paths]
    write_sample(tmp_path, 7, f1, f2, flow, occ)
    assert [p.read_bytes() for p in paths] == before
    assert flow_files(tmp_path) == {7: paths[2]}
    assert not list(tmp_path.glob("*.tmp"))


def test_io_failure(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(IoFailure) as err:
        write_sample(blocker / "sub", 0, np.zeros((2, 2, 3)), np.zeros((2, 2, 3)),
                     np.zeros((2, 2, 2)), np.zeros((2, 2), bool))
    assert err.value.code == "IoFailure"
    with pytest.raises(IoFailure):
        read_flo(tmp_path / "missing.flo")
    with pytest.raises(IoFailure):
        write_image(np.zeros((2, 2)), blocker / "x.pgm")


def test_manifest_round_trip(tmp_path):
    cfg = GenConfig()
    text = manifest_text(cfg.to_text(), cfg.hash(), 5, (0, 49), "0.1.0", SEED_RULE)
    write_manifest(tmp_path, text)
    fields, cfg_text = read_manifest(tmp_path)
    assert fields["samples"] == (0, 49) and fields["config_hash"] == cfg.hash()
    assert fields["seed_rule"] == SEED_RULE and fields["created"] == "unrecorded"
    assert cfg_text == cfg.to_text()
    s, _ = parse_manifest(manifest_text("", "h", 0, None, "0.1.0", SEED_RULE))
    assert s["samples"] is None
    with pytest.raises(BadHeader):
        parse_manifest("format = other\n[config]\n")


def test_sample_paths_padding(tmp_path):
    assert sample_paths(tmp_path, 123456)[0].name == "123456_img1.ppm"
