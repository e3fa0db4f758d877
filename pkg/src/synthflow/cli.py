"""``synthflow`` command line: gen, augment, degrade, stats, eval, presets.

Errors are reported as a single ``error: <Code>: <message>`` line on stderr
with exit status 1.
"""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (DEFAULT_RANGES, DisplacementHistogram, EpeAccumulator, default_edges, epe,
                       epe_csv_header, epe_csv_row)
from .augment import AugmentConfig, augment_sample
from .degrade import CAMERA_PROFILES, CameraProfile, apply_profile
from .errors import ConfigError, IoFailure, NoFlowFiles, SampleMismatch, SynthFlowError
from .generate import generate_sample, photos_for
from .io import (MANIFEST_NAME, encode_sample, flow_files, manifest_text, read_flo, read_manifest,
                 read_sample, sample_complete, write_image, write_manifest, write_sample)
from .presets import PRESETS, get_preset
from .scene import (SEED_RULE, GenConfig, apply_overrides, config_to_text, parse_lines,
                    sample_seed, section_to_text)


def _log(msg):
    print(msg, file=sys.stderr, flush=True)


def _parse_sets(items):
    out = []
    for item in items or ():
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out.append((k.strip(), v.strip()))
    return out


def _read_text(path):
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(path, exc) from exc


def resolve_config(preset=None, config_path=None, sets=(), seed=None):
    """Preset, then config file, then ``--set`` flags, then ``--seed``."""
    cfg = get_preset(preset) if preset else GenConfig()
    if config_path:
        cfg = apply_overrides(cfg, parse_lines(_read_text(config_path)))
    cfg = apply_overrides(cfg, _parse_sets(sets))
    if seed is not None:
        cfg = dataclasses.replace(cfg, master_seed=seed)
    return cfg


def _echo(text, label="config"):
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    for line in text.splitlines():
        _log(f"# {line}")
    _log(f"# {label}_hash = {digest}")
    return digest


def _parse_range(args):
    if args.range:
        lo, _, hi = args.range.partition(":")
        try:
            lo, hi = int(lo), int(hi)
        except ValueError:
            raise ConfigError(f"--range expects LO:HI, got {args.range!r}") from None
    else:
        if args.count == "infinite":
            return None
        try:
            count = int(args.count)
        except ValueError:
            raise ConfigError(f"--count expects an integer or 'infinite', got {args.count!r}") from None
        lo, hi = args.start, args.start + count
    if not 0 <= lo <= hi:
        raise ConfigError(f"bad sample range {lo}..{hi}")
    return lo, hi


# ---------------------------------------------------------------- gen

_WORKER = {}


def _worker_init(cfg, out):
    _WORKER["cfg"] = cfg
    _WORKER["out"] = out
    _WORKER["photos"] = photos_for(cfg)


def _gen_one(index):
    s = generate_sample(_WORKER["cfg"], index, _WORKER["photos"])
    write_sample(_WORKER["out"], index, s.frame1, s.frame2, s.flow, s.occ)
    return index


def _merge_manifest(out, cfg, digest, span, record_time):
    lo, hi = span
    created = "unrecorded"
    path = Path(out) / MANIFEST_NAME
    if path.exists():
        fields, _ = read_manifest(out)
        if fields.get("config_hash") != digest:
            raise ConfigError(f"{path} was written for config {fields.get('config_hash')}, "
                              f"not {digest}; use a fresh output directory")
        if fields["samples"] is not None:
            lo, hi = min(lo, fields["samples"][0]), max(hi, fields["samples"][1])
        created = fields.get("created", created)
    if record_time:
        epoch = os.environ.get("SOURCE_DATE_EPOCH")
        t = int(epoch) if epoch else int(time.time())
        created = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))
    text = manifest_text(config_to_text(cfg), digest, cfg.master_seed, (lo, hi),
                         __version__, SEED_RULE, created)
    write_manifest(out, text)


def _stream(cfg, start):
    out = sys.stdout.buffer
    photos = photos_for(cfg)
    i = start
    while True:
        s = generate_sample(cfg, i, photos)
        blobs = encode_sample(s.frame1, s.frame2, s.flow, s.occ)
        try:
            out.write(f"sample {i} {s.width} {s.height}\n".encode("ascii"))
            for b in blobs:
                out.write(b)
            out.flush()
        except BrokenPipeError:
            # consumer went away: the normal end of a streaming run
            os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
            return 0
        i += 1


def cmd_gen(args):
    cfg = resolve_config(args.preset, args.config, args.set, args.seed)
    digest = _echo(config_to_text(cfg))
    span = _parse_range(args)
    if span is None:
        return _stream(cfg, args.start)
    if not args.out:
        raise ConfigError("--out is required unless --count infinite")
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(out, exc) from exc
    _merge_manifest(out, cfg, digest, span, args.record_time)
    todo = [i for i in range(*span) if args.overwrite or not sample_complete(out, i)]
    skipped = (span[1] - span[0]) - len(todo)
    if skipped:
        _log(f"gen: {skipped} complete samples skipped")
    total = len(todo)
    done = 0
    t0 = time.time()
    if args.threads <= 1 or total <= 1:
        _worker_init(cfg, out)
        for i in todo:
            _gen_one(i)
            done += 1
            _progress(done, total, t0, args.quiet)
    else:
        with ProcessPoolExecutor(args.threads, initializer=_worker_init, initargs=(cfg, out)) as ex:
            for _ in ex.map(_gen_one, todo, chunksize=1):
                done += 1
                _progress(done, total, t0, args.quiet)
    _log(f"gen: wrote {total} samples to {out} in {time.time() - t0:.1f}s")
    return 0


def _progress(done, total, t0, quiet):
    if not quiet and (done == total or done % 10 == 0):
        rate = done / max(time.time() - t0, 1e-9)
        _log(f"gen: {done}/{total} ({rate:.2f} samples/s)")


# ---------------------------------------------------------------- augment / degrade

def _indices(directory):
    files = flow_files(directory)
    if not files:
        raise NoFlowFiles(f"no NNNNNN_flow.flo files in {directory}")
    return sorted(files)


def cmd_augment(args):
    base = get_preset(args.preset).augment if args.preset else AugmentConfig()
    wrapper = apply_overrides(GenConfig(augment=base), [("augment." + k, v) for k, v in _parse_sets(args.set)])
    cfg = wrapper.augment
    _echo(section_to_text(cfg, "augment."), "augment")
    out = Path(args.out)
    for i in _indices(args.input):
        s = read_sample(args.input, i)
        rng = np.random.default_rng([sample_seed(args.seed, i), 1])
        a = augment_sample(s, cfg.mode, rng, cfg)
        write_sample(out, i, a.frame1, a.frame2, a.flow, a.occ)
        if a.valid is not None:
            write_image(a.valid, out / f"{i:06d}_valid.pgm")
    return 0


def cmd_degrade(args):
    profile = CAMERA_PROFILES[args.profile] if args.profile else CameraProfile()
    wrapper = apply_overrides(GenConfig(camera=profile), [("camera." + k, v) for k, v in _parse_sets(args.set)])
    profile = wrapper.camera
    _echo(section_to_text(profile, "camera."), "camera")
    out = Path(args.out)
    for i in _indices(args.input):
        s = read_sample(args.input, i)
        f1, f2, flow = apply_profile(s.frame1, s.frame2, s.flow, profile)
        write_sample(out, i, f1, f2, flow, s.occ)
    return 0


# ---------------------------------------------------------------- stats / eval

def cmd_stats(args):
    edges = default_edges(args.bins, args.lo, args.hi)
    _echo(f"bins = {args.bins}\nhi = {args.hi!r}\nlo = {args.lo!r}\n", "stats")
    files = flow_files(args.dataset)
    if not files:
        raise NoFlowFiles(f"no NNNNNN_flow.flo files in {args.dataset}")
    hist = DisplacementHistogram(edges)
    for i in sorted(files):
        hist.add(read_flo(files[i]))
    for line in hist.csv_lines():
        print(line)
    return 0


def _parse_ranges(text):
    if not text:
        return DEFAULT_RANGES
    cuts = [float(t) for t in text.split(",")]
    if len(cuts) < 2 or any(b <= a for a, b in zip(cuts, cuts[1:])):
        raise ConfigError("--ranges expects increasing cut points, e.g. 0,10,40,160,inf")
    return tuple(zip(cuts[:-1], cuts[1:]))


def cmd_eval(args):
    ranges = _parse_ranges(args.ranges)
    _echo("ranges = " + ",".join(f"{lo:g}-{hi:g}" for lo, hi in ranges) + "\n", "eval")
    est, gt = flow_files(args.est), flow_files(args.gt)
    if not gt:
        raise NoFlowFiles(f"no NNNNNN_flow.flo files in {args.gt}")
    missing = set(est) ^ set(gt)
    if missing:
        raise SampleMismatch(f"{i:06d}" for i in missing)
    acc = EpeAccumulator(ranges)
    rows = [epe_csv_header(ranges)]
    for i in sorted(gt):
        e, g = read_flo(est[i]), read_flo(gt[i])
        rows.append(epe_csv_row(f"{i:06d}", epe(e, g, ranges)))
        acc.add(e, g)
    report = acc.report()
    rows.append(epe_csv_row("all", report))
    for line in report.lines():
        print(line)
    if args.csv:
        try:
            Path(args.csv).write_text("\n".join(rows) + "\n", encoding="utf-8")
        except OSError as exc:
            raise IoFailure(args.csv, exc) from exc
    return 0


def cmd_presets(args):
    if args.name:
        sys.stdout.write(config_to_text(get_preset(args.name)))
        return 0
    for name in PRESETS:
        print(name)
    return 0


# ---------------------------------------------------------------- parser

def build_parser():
    p = argparse.ArgumentParser(prog="synthflow", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"synthflow {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate samples")
    g.add_argument("--preset")
    g.add_argument("--config", help="file of 'key = value' lines")
    g.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
    g.add_argument("--seed", type=int, help="master seed override")
    g.add_argument("--out", help="output directory")
    g.add_argument("--count", default="1", help="number of samples, or 'infinite' to stream to stdout")
    g.add_argument("--start", type=int, default=0, help="first sample index")
    g.add_argument("--range", help="LO:HI sample index range (overrides --count/--start)")
    g.add_argument("--threads", type=int, default=1)
    g.add_argument("--overwrite", action="store_true", help="regenerate complete samples")
    g.add_argument("--record-time", action="store_true", help="store a creation time in the manifest")
    g.add_argument("--quiet", action="store_true")
    g.set_defaults(func=cmd_gen)

    a = sub.add_parser("augment", help="augment an existing dataset")
    a.add_argument("input")
    a.add_argument("--out", required=True)
    a.add_argument("--preset", help="an aug-* preset supplying the mode")
    a.add_argument("--set", action="append", metavar="KEY=VALUE", help="e.g. mode.geom_both=true")
    a.add_argument("--seed", type=int, default=0)
    a.set_defaults(func=cmd_augment)

    d = sub.add_parser("degrade", help="apply a camera profile to a dataset")
    d.add_argument("input")
    d.add_argument("--out", required=True)
    d.add_argument("--profile", choices=sorted(CAMERA_PROFILES))
    d.add_argument("--set", action="append", metavar="KEY=VALUE", help="e.g. gaussian_sigma=1.5")
    d.set_defaults(func=cmd_degrade)

    s = sub.add_parser("stats", help="displacement histogram as CSV")
    s.add_argument("dataset")
    s.add_argument("--bins", type=int, default=40)
    s.add_argument("--lo", type=float, default=0.1)
    s.add_argument("--hi", type=float, default=300.0)
    s.set_defaults(func=cmd_stats)

    e = sub.add_parser("eval", help="EPE of estimated flow against ground truth")
    e.add_argument("est")
    e.add_argument("gt")
    e.add_argument("--ranges", help="cut points, default 0,10,40,160,inf")
    e.add_argument("--csv", help="write per-sample CSV here")
    e.set_defaults(func=cmd_eval)

    r = sub.add_parser("presets", help="list presets or show one")
    r.add_argument("name", nargs="?")
    r.set_defaults(func=cmd_presets)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SynthFlowError as exc:
        msg = str(exc).replace("\n", " ")
        _log(f"error: {exc.code}: {msg}")
        return 1
    except OSError as exc:
        _log(f"error: IoFailure: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
