"""Arrival-price laws, the uniformizing coordinate change, and bin partitions.

A price law is a (density, cdf, quantile) triple on a closed support with a
continuous, strictly increasing CDF.  Three builtins cover the cases needed in
practice: uniform, piecewise-linear density, and tabulated CDF with monotone
interpolation.  All callables accept scalars or numpy arrays.
"""

from __future__ import annotations

import csv
from bisect import bisect_right
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

__all__ = [
    "PriceDist",
    "ArrivalSpec",
    "BinPartition",
    "uniform_dist",
    "piecewise_linear_dist",
    "cdf_table_dist",
    "dist_from_config",
    "quantile",
    "transform_to_uniform_bid",
    "make_partition",
    "refines",
]

# Boundary points closer than this are considered one cut (avoids zero-width bins
# when the three boundary families coincide, as they do for uniform arrivals).
BOUNDARY_MERGE_TOL = 1e-12


@dataclass(frozen=True)
class PriceDist:
    """A continuous price law given by (density, cdf, quantile) on a closed support."""

    density: Callable
    cdf: Callable
    quantile: Callable
    support: tuple[float, float]
    kind: str = "custom"

    def __post_init__(self):
        lo, hi = self.support
        if not lo < hi:
            raise ValueError(f"degenerate support {self.support}")


@dataclass(frozen=True)
class ArrivalSpec:
    """Arrival mix: bid probability and the two price laws."""

    bid_dist: PriceDist
    ask_dist: PriceDist
    p_b: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.p_b < 1.0:
            raise ValueError(f"p_b must be in (0, 1), got {self.p_b}")


def uniform_dist(lo: float = 0.0, hi: float = 1.0) -> PriceDist:
    width = hi - lo
    if width <= 0:
        raise ValueError("uniform support must have positive width")

    def density(x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= lo) & (x <= hi), 1.0 / width, 0.0)

    def cdf(x):
        x = np.asarray(x, dtype=float)
        return np.clip((x - lo) / width, 0.0, 1.0)

    def quantile_fn(u):
        u = np.asarray(u, dtype=float)
        return lo + u * width

    return PriceDist(density, cdf, quantile_fn, (lo, hi), kind="uniform")


def piecewise_linear_dist(xs, ys) -> PriceDist:
    """Density linear between knots (xs, ys); normalized to unit mass.

    The CDF is piecewise quadratic and inverted segment-by-segment, so the
    quantile is exact up to float rounding.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.ndim != 1 or xs.size < 2 or not np.all(np.diff(xs) > 0):
        raise ValueError("knot abscissae must be strictly increasing, at least two")
    if np.any(ys < 0) or not np.any(ys > 0):
        raise ValueError("density knots must be nonnegative with positive mass")
    total = float(np.trapezoid(ys, xs))
    ys = ys / total
    dx = np.diff(xs)
    slopes = np.diff(ys) / dx
    cum = np.concatenate([[0.0], np.cumsum((ys[:-1] + ys[1:]) / 2 * dx)])
    cum[-1] = 1.0

    def _seg(x):
        return np.clip(np.searchsorted(xs, x, side="right") - 1, 0, xs.size - 2)

    def density(x):
        x = np.asarray(x, dtype=float)
        i = _seg(x)
        inside = (x >= xs[0]) & (x <= xs[-1])
        return np.where(inside, ys[i] + slopes[i] * (x - xs[i]), 0.0)

    def cdf(x):
        x = np.asarray(x, dtype=float)
        i = _seg(x)
        d = np.clip(x, xs[0], xs[-1]) - xs[i]
        return np.clip(cum[i] + ys[i] * d + 0.5 * slopes[i] * d * d, 0.0, 1.0)

    def quantile_fn(u):
        u = np.asarray(u, dtype=float)
        if np.any((u < 0) | (u > 1)):
            raise ValueError("quantile argument outside [0, 1]")
        i = np.clip(np.searchsorted(cum, u, side="right") - 1, 0, xs.size - 2)
        t = u - cum[i]
        y0, s = ys[i], slopes[i]
        lin = np.divide(t, y0, out=np.zeros_like(t), where=y0 > 0)
        disc = np.maximum(y0 * y0 + 2 * s * t, 0.0)
        quad = np.divide(np.sqrt(disc) - y0, s, out=lin.copy(), where=s != 0)
        d = np.where(np.abs(s) * dx[i] < 1e-14 * np.maximum(y0, 1e-300), lin, quad)
        return np.clip(xs[i] + d, xs[0], xs[-1])

    return PriceDist(density, cdf, quantile_fn, (float(xs[0]), float(xs[-1])),
                     kind="piecewise_linear")


def cdf_table_dist(xs, cdf_values) -> PriceDist:
    """Tabulated CDF with monotone linear interpolation.

    Both columns must be strictly increasing; the table must span probability
    0 to 1 (within 1e-9, then pinned exactly).  Density is the piecewise
    constant derivative.
    """
    xs = np.asarray(xs, dtype=float)
    fs = np.asarray(cdf_values, dtype=float)
    if xs.size < 2 or xs.shape != fs.shape:
        raise ValueError("CDF table needs two equal-length columns, at least two rows")
    if not (np.all(np.diff(xs) > 0) and np.all(np.diff(fs) > 0)):
        raise ValueError("CDF table columns must be strictly increasing")
    if abs(fs[0]) > 1e-9 or abs(fs[-1] - 1.0) > 1e-9:
        raise ValueError("CDF table must run from 0 to 1")
    fs = fs.copy()
    fs[0], fs[-1] = 0.0, 1.0
    slopes = np.diff(fs) / np.diff(xs)

    def density(x):
        x = np.asarray(x, dtype=float)
        i = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, xs.size - 2)
        inside = (x >= xs[0]) & (x <= xs[-1])
        return np.where(inside, slopes[i], 0.0)

    def cdf(x):
        return np.interp(np.asarray(x, dtype=float), xs, fs)

    def quantile_fn(u):
        u = np.asarray(u, dtype=float)
        if np.any((u < 0) | (u > 1)):
            raise ValueError("quantile argument outside [0, 1]")
        return np.interp(u, fs, xs)

    return PriceDist(density, cdf, quantile_fn, (float(xs[0]), float(xs[-1])),
                     kind="cdf_table")


def dist_from_config(cfg: dict) -> PriceDist:
    """Build a PriceDist from a config document {kind: ..., params...}."""
    kind = cfg.get("kind")
    if kind == "uniform":
        return uniform_dist(float(cfg.get("lo", 0.0)), float(cfg.get("hi", 1.0)))
    if kind == "piecewise_linear":
        return piecewise_linear_dist(cfg["x"], cfg["y"])
    if kind == "cdf_table":
        if "path" in cfg:
            xs, fs = _read_cdf_csv(cfg["path"])
        else:
            xs, fs = cfg["x"], cfg["cdf"]
        return cdf_table_dist(xs, fs)
    raise ValueError(f"unknown distribution kind {kind!r}")


def _read_cdf_csv(path) -> tuple[list[float], list[float]]:
    xs, fs = [], []
    with open(Path(path), newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                x, f = float(row[0]), float(row[1])
            except ValueError:
                continue  # header row
            xs.append(x)
            fs.append(f)
    return xs, fs


def quantile(dist: PriceDist, u) -> float | np.ndarray:
    """Q(u) with domain check; F(Q(u)) = u for continuous strictly increasing F."""
    arr = np.asarray(u, dtype=float)
    if np.any((arr < 0) | (arr > 1)):
        raise ValueError(f"quantile argument outside [0, 1]: {u}")
    out = dist.quantile(arr)
    return float(out) if np.isscalar(u) or np.ndim(u) == 0 else out


def transform_to_uniform_bid(spec: ArrivalSpec, check_points: int = 101) -> ArrivalSpec:
    """Push prices through the bid CDF so bids become uniform on [0, 1].

    The ask law becomes its pushforward under x -> F_b(x); matching decisions
    depend only on price order, so book dynamics are unchanged.
    """
    fb, qb = spec.bid_dist.cdf, spec.bid_dist.quantile
    fa_cdf, qa = spec.ask_dist.cdf, spec.ask_dist.quantile
    fb_pdf, fa_pdf = spec.bid_dist.density, spec.ask_dist.density

    lo, hi = spec.bid_dist.support
    probe = fb(np.linspace(lo, hi, check_points))
    if np.any(np.diff(probe) <= 0):
        raise ValueError("bid CDF is not strictly increasing on its support; "
                         "cannot invert the coordinate change")

    def cdf(u):
        return np.asarray(fa_cdf(qb(np.asarray(u, dtype=float))), dtype=float)

    def quantile_fn(v):
        return np.asarray(fb(qa(np.asarray(v, dtype=float))), dtype=float)

    def density(u):
        x = qb(np.asarray(u, dtype=float))
        num = np.asarray(fa_pdf(x), dtype=float)
        den = np.asarray(fb_pdf(x), dtype=float)
        return np.divide(num, den, out=np.zeros_like(num), where=den > 0)

    ask = PriceDist(density, cdf, quantile_fn, (0.0, 1.0), kind="pushforward")
    return ArrivalSpec(uniform_dist(0.0, 1.0), ask, spec.p_b)


@dataclass(frozen=True)
class BinPartition:
    """Partition of a closed support into left-closed bins.

    `boundaries` are the interior cut points; bin k is [edge_k, edge_{k+1})
    with the last bin closed on the right.
    """

    support: tuple[float, float]
    boundaries: np.ndarray = field(default_factory=lambda: np.array([]))

    def __post_init__(self):
        b = np.asarray(self.boundaries, dtype=float)
        object.__setattr__(self, "boundaries", b)
        object.__setattr__(self, "_blist", b.tolist())
        lo, hi = self.support
        if b.size and (np.any(np.diff(b) <= 0) or b[0] <= lo or b[-1] >= hi):
            raise ValueError("boundaries must be strictly increasing, interior to support")

    @property
    def n_bins(self) -> int:
        return self.boundaries.size + 1

    @property
    def edges(self) -> np.ndarray:
        lo, hi = self.support
        return np.concatenate([[lo], self.boundaries, [hi]])

    def index(self, price):
        """Bin containing `price`; boundary points resolve to the right bin."""
        if np.ndim(price) == 0:
            return bisect_right(self._blist, price)
        return np.searchsorted(self.boundaries, price, side="right")

    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    def masses(self, dist: PriceDist) -> np.ndarray:
        f = dist.cdf(self.edges)
        return np.diff(f)


def make_partition(n_bins: int, spec: ArrivalSpec) -> BinPartition:
    """Cut [0, 1] at i/N and both quantile families Q_b(i/N), Q_a(i/N).

    By construction every bin has width, bid mass, and ask mass all <= 1/N.
    Requires arrival laws in uniformized coordinates (support [0, 1]).
    """
    if n_bins < 2:
        raise ValueError(f"need at least 2 bins, got {n_bins}")
    for d in (spec.bid_dist, spec.ask_dist):
        lo, hi = d.support
        if abs(lo) > 1e-9 or abs(hi - 1.0) > 1e-9:
            raise ValueError("make_partition expects support [0, 1]; apply "
                             "transform_to_uniform_bid first")
    levels = np.arange(1, n_bins) / n_bins
    cuts = np.concatenate([
        levels,
        np.asarray(spec.bid_dist.quantile(levels), dtype=float),
        np.asarray(spec.ask_dist.quantile(levels), dtype=float),
    ])
    cuts.sort()
    merged = []
    for c in cuts:
        if c <= BOUNDARY_MERGE_TOL or c >= 1.0 - BOUNDARY_MERGE_TOL:
            continue
        if not merged or c - merged[-1] > BOUNDARY_MERGE_TOL:
            merged.append(c)
    return BinPartition((0.0, 1.0), np.asarray(merged))


def refines(fine: BinPartition, coarse: BinPartition) -> bool:
    """True iff every boundary of `coarse` is (within tolerance) a boundary of `fine`."""
    if not np.allclose(fine.support, coarse.support, atol=BOUNDARY_MERGE_TOL):
        raise ValueError("partitions live on different supports")
    if coarse.boundaries.size == 0:
        return True
    if fine.boundaries.size == 0:
        return False
    pos = np.searchsorted(fine.boundaries, coarse.boundaries)
    for c, i in zip(coarse.boundaries, pos):
        near = []
        if i < fine.boundaries.size:
            near.append(abs(fine.boundaries[i] - c))
        if i > 0:
            near.append(abs(fine.boundaries[i - 1] - c))
        if min(near) > BOUNDARY_MERGE_TOL:
            return False
    return True


def union_refinement(a: BinPartition, b: BinPartition) -> BinPartition:
    """Coarsest partition refining both arguments (boundary-set union)."""
    if not np.allclose(a.support, b.support, atol=BOUNDARY_MERGE_TOL):
        raise ValueError("partitions live on different supports")
    cuts = np.sort(np.concatenate([a.boundaries, b.boundaries]))
    merged = []
    for c in cuts:
        if not merged or c - merged[-1] > BOUNDARY_MERGE_TOL:
            merged.append(c)
    return BinPartition(a.support, np.asarray(merged))
