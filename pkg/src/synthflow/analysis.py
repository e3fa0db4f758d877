"""Endpoint error, partial EPE by GT magnitude, and displacement histograms."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EdgeMismatch

INF = math.inf
DEFAULT_RANGES = ((0.0, 10.0), (10.0, 40.0), (40.0, 160.0), (160.0, INF))


def _fmt(v):
    return "inf" if v == INF else f"{v:g}"


def range_label(r):
    return f"{_fmt(r[0])}-{_fmt(r[1])}"


def _magnitude(flow):
    flow = np.asarray(flow, dtype=float)
    return np.sqrt(flow[..., 0] * flow[..., 0] + flow[..., 1] * flow[..., 1])


def endpoint_error(est, gt):
    est = np.asarray(est, dtype=float)
    gt = np.asarray(gt, dtype=float)
    if est.shape != gt.shape:
        raise DimensionMismatch(f"estimate {est.shape} vs ground truth {gt.shape}")
    if est.ndim != 3 or est.shape[-1] != 2:
        raise DimensionMismatch(f"flow fields must be (H, W, 2), got {est.shape}")
    return _magnitude(est - gt)


@dataclass
class EpeReport:
    """Mean EPE and its split by GT magnitude range.

    ``partial[i]`` is the EPE summed over pixels whose GT magnitude is in
    ``ranges[i]``, divided by the total pixel count, so the partials add up
    to ``total_epe`` when the ranges cover [0, inf).
    """

    total_epe: float
    ranges: tuple
    partial: tuple
    pixel_count: int

    def lines(self):
        out = [f"EPE {self.total_epe:.6f} px over {self.pixel_count} pixels"]
        for r, c in zip(self.ranges, self.partial):
            out.append(f"  {range_label(r):>10} px: {c:.6f}")
        return out


class EpeAccumulator:
    """Streaming sums; ``report()`` equals :func:`epe` on all pixels pooled."""

    def __init__(self, ranges=DEFAULT_RANGES):
        self.ranges = tuple((float(lo), float(hi)) for lo, hi in ranges)
        self.total = 0.0
        self.sums = [0.0] * len(self.ranges)
        self.count = 0

    def add(self, est, gt):
        e = endpoint_error(est, gt)
        mag = _magnitude(gt)
        self.total += float(e.sum())
        for i, (lo, hi) in enumerate(self.ranges):
            self.sums[i] += float(e[(mag >= lo) & (mag < hi)].sum())
        self.count += e.size
        return self

    def merge(self, other):
        if self.ranges != other.ranges:
            raise EdgeMismatch("cannot merge EPE sums over different ranges")
        self.total += other.total
        self.sums = [a + b for a, b in zip(self.sums, other.sums)]
        self.count += other.count
        return self

    def report(self):
        n = max(self.count, 1)
        return EpeReport(self.total / n, self.ranges, tuple(s / n for s in self.sums), self.count)


def epe(est, gt, ranges=DEFAULT_RANGES):
    return EpeAccumulator(ranges).add(est, gt).report()


def epe_csv_header(ranges=DEFAULT_RANGES):
    return "sample,total_epe," + ",".join(f"epe_{range_label(r)}" for r in ranges) + ",pixels"


def epe_csv_row(name, report):
    parts = ",".join(f"{c:.9g}" for c in report.partial)
    return f"{name},{report.total_epe:.9g},{parts},{report.pixel_count}"


# ---------------------------------------------------------------- histograms

def default_edges(n_bins=40, lo=0.1, hi=300.0):
    """``[0, lo]`` underflow bin followed by ``n_bins`` log-spaced bins up to ``hi``."""
    ratio = hi / lo
    return np.array([0.0] + [lo * ratio ** (i / n_bins) for i in range(n_bins + 1)])


@dataclass
class DisplacementHistogram:
    """Counts of per-pixel flow magnitude. The last bin also absorbs values
    beyond the last edge."""

    bin_edges: np.ndarray
    counts: np.ndarray = None
    total_pixels: int = 0

    def __post_init__(self):
        self.bin_edges = np.asarray(self.bin_edges, dtype=float)
        if self.bin_edges.ndim != 1 or len(self.bin_edges) < 2 or np.any(np.diff(self.bin_edges) <= 0):
            raise ValueError("bin edges must be strictly increasing with at least 2 entries")
        if self.counts is None:
            self.counts = np.zeros(len(self.bin_edges) - 1, dtype=np.int64)

    @property
    def n_bins(self):
        return len(self.bin_edges) - 1

    def add(self, flow):
        mag = _magnitude(flow).ravel()
        idx = np.searchsorted(self.bin_edges, mag, side="right") - 1
        idx = np.clip(idx, 0, self.n_bins - 1)
        self.counts += np.bincount(idx, minlength=self.n_bins)
        self.total_pixels += mag.size
        return self

    def merge(self, other):
        _check_edges(self, other)
        self.counts = self.counts + other.counts
        self.total_pixels += other.total_pixels
        return self

    def proportions(self):
        return self.counts / max(self.total_pixels, 1)

    def cdf(self):
        return np.cumsum(self.counts) / max(self.total_pixels, 1)

    def csv_lines(self):
        yield "bin,lo,hi,count,fraction"
        p = self.proportions()
        for i in range(self.n_bins):
            hi = "inf" if i == self.n_bins - 1 else f"{self.bin_edges[i + 1]:.9g}"
            yield f"{i},{self.bin_edges[i]:.9g},{hi},{self.counts[i]},{p[i]:.9g}"


def displacement_histogram(fields, bin_edges=None):
    """Stream flow fields into one histogram (constant memory in the number of fields)."""
    hist = DisplacementHistogram(default_edges() if bin_edges is None else bin_edges)
    n = 0
    for f in fields:
        hist.add(f)
        n += 1
    if n == 0:
        raise ValueError("no flow fields given")
    return hist


def _check_edges(a, b):
    if a.bin_edges.shape != b.bin_edges.shape or not np.array_equal(a.bin_edges, b.bin_edges):
        raise EdgeMismatch("histograms have different bin edges")


def compare_histograms(a, b):
    """Symmetric chi-square over proportions: ``sum (p - q)^2 / (p + q)``, in [0, 2]."""
    _check_edges(a, b)
    p, q = a.proportions(), b.proportions()
    s = p + q
    m = s > 0
    return float((((p - q) ** 2)[m] / s[m]).sum())


def ks_distance(a, b):
    """Largest gap between the binned CDFs.

    Only the bin count has to agree, so a histogram built with edges scaled by
    ``k`` can be compared against one built with the original edges.
    """
    if a.n_bins != b.n_bins:
        raise EdgeMismatch("histograms have different bin counts")
    return float(np.abs(a.cdf() - b.cdf()).max())
