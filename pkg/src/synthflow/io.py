"""File formats and dataset layout.

* ``.flo``: float32 magic 202021.25, int32 width, int32 height, then
  row-major interleaved float32 (u, v); everything little-endian.
* PFM (grayscale only): ``Pf`` header, negative scale = little-endian,
  rows stored bottom-up.
* PPM (P6) / PGM (P5): maxval 255, quantized as ``floor(v * 255 + 0.5)``.
* A sample ``i`` is four files ``{i:06d}_img1.ppm``, ``_img2.ppm``,
  ``_flow.flo`` and ``_occ.pgm`` (0/255) plus a shared ``manifest.txt``.
"""
from __future__ import annotations

import os
import re
import tempfile
from pathlib import Path

import numpy as np

from .errors import BadHeader, BadMagic, DimensionOverflow, IoFailure, TruncatedFile
from .sample import Sample

FLO_MAGIC = 202021.25
MAX_SIDE = 100_000
MANIFEST_NAME = "manifest.txt"
MANIFEST_FORMAT = "synthflow-manifest-1"
SUFFIXES = ("img1.ppm", "img2.ppm", "flow.flo", "occ.pgm")


def _read(path):
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(path, exc) from exc


def _write_atomic(path, data):
    """Write via a temp file and rename so readers never see partial files."""
    path = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix="." + path.name, suffix=".tmp")
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except OSError as exc:
        raise IoFailure(path, exc) from exc


# ---------------------------------------------------------------- .flo

def encode_flo(flow):
    flow = np.asarray(flow)
    if flow.ndim != 3 or flow.shape[2] != 2:
        raise ValueError(f"flow must be (H, W, 2), got {flow.shape}")
    if not np.isfinite(flow).all():
        raise ValueError("flow contains non-finite values")
    h, w = flow.shape[:2]
    head = np.array([FLO_MAGIC], "<f4").tobytes() + np.array([w, h], "<i4").tobytes()
    return head + np.ascontiguousarray(flow, dtype="<f4").tobytes()


def decode_flo(data):
    if len(data) < 12:
        raise TruncatedFile(f"flo header needs 12 bytes, got {len(data)}")
    magic = np.frombuffer(data, "<f4", 1)[0]
    if magic != np.float32(FLO_MAGIC):
        raise BadMagic(f"flo magic is {float(magic)!r}, expected {FLO_MAGIC}")
    w, h = (int(v) for v in np.frombuffer(data, "<i4", 2, offset=4))
    if not (0 < w <= MAX_SIDE and 0 < h <= MAX_SIDE):
        raise DimensionOverflow(f"flo dimensions {w}x{h} outside 1..{MAX_SIDE}")
    need = 12 + 8 * w * h
    if len(data) < need:
        raise TruncatedFile(f"flo payload needs {need} bytes, got {len(data)}")
    return np.frombuffer(data, "<f4", 2 * w * h, offset=12).reshape(h, w, 2).astype(np.float32)


def write_flo(flow, path):
    _write_atomic(path, encode_flo(flow))


def read_flo(path):
    """Flow as a float32 ``(H, W, 2)`` array."""
    return decode_flo(_read(path))


# ---------------------------------------------------------------- PFM

def encode_pfm(img):
    img = np.asarray(img)
    if img.ndim == 3 and img.shape[2] == 1:
        img = img[..., 0]
    if img.ndim != 2:
        raise ValueError("PFM writer handles single-channel images only")
    h, w = img.shape
    head = f"Pf\n{w} {h}\n-1.0\n".encode("ascii")
    return head + np.ascontiguousarray(img[::-1], dtype="<f4").tobytes()


def _header_tokens(data, count):
    """First ``count`` whitespace-separated tokens (``#`` comments skipped) and the
    offset just past the single whitespace byte that ends the last one."""
    tokens, pos, n = [], 0, len(data)
    while len(tokens) < count:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos < n and data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise TruncatedFile("header ends early")
        tokens.append(data[start:pos].decode("ascii", "replace"))
    if pos >= n:
        raise TruncatedFile("header ends early")
    return tokens, pos + 1


def decode_pfm(data):
    if data[:2] == b"PF":
        raise BadHeader("color PFM ('PF') is not supported; expected grayscale 'Pf'")
    if data[:2] != b"Pf":
        raise BadHeader(f"not a grayscale PFM (header {data[:2]!r})")
    (_, ws, hs, ss), off = _header_tokens(data, 4)
    try:
        w, h, scale = int(ws), int(hs), float(ss)
    except ValueError as exc:
        raise BadHeader(f"bad PFM header: {exc}") from exc
    if not (0 < w <= MAX_SIDE and 0 < h <= MAX_SIDE) or scale == 0:
        raise BadHeader(f"bad PFM dimensions/scale {w}x{h} {scale}")
    dt = "<f4" if scale < 0 else ">f4"
    if len(data) < off + 4 * w * h:
        raise TruncatedFile(f"PFM payload needs {4 * w * h} bytes")
    arr = np.frombuffer(data, dt, w * h, offset=off).reshape(h, w)
    return arr[::-1].astype(np.float32)


def write_pfm(img, path):
    _write_atomic(path, encode_pfm(img))


def read_pfm(path):
    return decode_pfm(_read(path))


# ---------------------------------------------------------------- PPM / PGM

def quantize(img):
    """Round-half-up to 8 bits."""
    return np.floor(np.clip(np.asarray(img, dtype=float), 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def encode_pnm(img):
    img = np.asarray(img)
    if img.dtype == bool:
        q = np.where(img, 255, 0).astype(np.uint8)
    elif img.dtype == np.uint8:
        q = img
    else:
        q = quantize(img)
    if q.ndim == 2:
        magic = "P5"
    elif q.ndim == 3 and q.shape[2] == 3:
        magic = "P6"
    else:
        raise ValueError(f"cannot store shape {img.shape} as PPM/PGM")
    h, w = q.shape[:2]
    return f"{magic}\n{w} {h}\n255\n".encode("ascii") + np.ascontiguousarray(q).tobytes()


def decode_pnm(data, as_float=True):
    magic = data[:2]
    if magic not in (b"P5", b"P6"):
        raise BadHeader(f"not a binary PGM/PPM (header {magic!r})")
    (_, ws, hs, ms), off = _header_tokens(data, 4)
    try:
        w, h, maxval = int(ws), int(hs), int(ms)
    except ValueError as exc:
        raise BadHeader(f"bad PNM header: {exc}") from exc
    if maxval != 255 or not (0 < w <= MAX_SIDE and 0 < h <= MAX_SIDE):
        raise BadHeader(f"unsupported PNM {w}x{h} maxval {maxval}")
    c = 3 if magic == b"P6" else 1
    if len(data) < off + w * h * c:
        raise TruncatedFile("PNM payload ends early")
    q = np.frombuffer(data, np.uint8, w * h * c, offset=off)
    q = q.reshape((h, w, 3) if c == 3 else (h, w))
    return q / 255.0 if as_float else q.copy()


def write_image(img, path):
    _write_atomic(path, encode_pnm(img))


def read_image(path, as_float=True):
    return decode_pnm(_read(path), as_float)


# ---------------------------------------------------------------- samples

def sample_paths(directory, index):
    d = Path(directory)
    return tuple(d / f"{int(index):06d}_{s}" for s in SUFFIXES)


def sample_complete(directory, index):
    return all(p.is_file() for p in sample_paths(directory, index))


def encode_sample(frame1, frame2, flow, occ):
    return (encode_pnm(frame1), encode_pnm(frame2), encode_flo(flow),
            encode_pnm(np.asarray(occ, dtype=bool)))


def write_sample(directory, index, frame1, frame2, flow, occ):
    """Write the four files of one sample; rewriting is idempotent."""
    d = Path(directory)
    try:
        d.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(d, exc) from exc
    paths = sample_paths(d, index)
    for p, blob in zip(paths, encode_sample(frame1, frame2, flow, occ)):
        _write_atomic(p, blob)
    return paths


def read_sample(directory, index):
    p1, p2, pf, po = sample_paths(directory, index)
    return Sample(read_image(p1), read_image(p2), read_flo(pf),
                  read_image(po, as_float=False) > 127, index=int(index))


_FLO_NAME = re.compile(r"^(\d+)_flow\.flo$")


def flow_files(directory):
    """``{index: path}`` for every ``NNNNNN_flow.flo`` in ``directory``."""
    out = {}
    for p in sorted(Path(directory).glob("*.flo")):
        m = _FLO_NAME.match(p.name)
        if m:
            out[int(m.group(1))] = p
    return out


# ---------------------------------------------------------------- manifest

def manifest_text(config_text, config_hash, master_seed, samples, tool_version,
                  seed_rule, created="unrecorded"):
    """``samples`` is ``(lo, hi)`` or ``None`` for a streaming run."""
    span = "streaming" if samples is None else f"{samples[0]}..{samples[1]}"
    head = [
        f"format = {MANIFEST_FORMAT}",
        f"tool_version = {tool_version}",
        f"config_hash = {config_hash}",
        f"master_seed = {master_seed}",
        f"samples = {span}",
        f"seed_rule = {seed_rule}",
        f"created = {created}",
        "[config]",
    ]
    return "\n".join(head) + "\n" + config_text


def parse_manifest(text):
    """Returns ``(fields, config_text)``; ``samples`` becomes ``(lo, hi)`` or ``None``."""
    head, sep, config_text = text.partition("[config]\n")
    if not sep:
        raise BadHeader("manifest has no [config] section")
    fields = {}
    for line in head.splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            fields[k.strip()] = v.strip()
    if fields.get("format") != MANIFEST_FORMAT:
        raise BadHeader(f"unknown manifest format {fields.get('format')!r}")
    span = fields.get("samples", "streaming")
    if span == "streaming":
        fields["samples"] = None
    else:
        lo, hi = span.split("..")
        fields["samples"] = (int(lo), int(hi))
    return fields, config_text


def write_manifest(directory, text):
    path = Path(directory) / MANIFEST_NAME
    _write_atomic(path, text.encode("utf-8"))
    return path


def read_manifest(directory):
    path = Path(directory) / MANIFEST_NAME
    return parse_manifest(_read(path).decode("utf-8"))
