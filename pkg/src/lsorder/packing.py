"""r-packings of finite point sets and of the unit sphere.

Every construction scans its input in order and accepts a point iff it is farther than
``r`` from everything accepted so far, so the output is reproducible without seeds.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Direction

# Ceilings for |sphere_packing(d, r)| * r^(d-1) (measured 2, 4.5, 8.5, 14.6) and for
# the group count of separated_partition over (R/r)^d (measured <= 1.5); asserted in
# tests/test_packing.py.
SPHERE_PACKING_CONSTANT = {1: 2.0, 2: 6.0, 3: 12.0, 4: 20.0}
PARTITION_CONSTANT = {1: 3.0, 2: 3.0, 3: 3.0}


@dataclass(frozen=True)
class Packing:
    points: np.ndarray
    radius: float
    source_size: int
    # positions of the packing points inside the input sequence
    indices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class DirectionNet:
    directions: tuple[Direction, ...]
    resolution: float

    def as_array(self) -> np.ndarray:
        return np.array([v.components for v in self.directions], dtype=float)

    def __len__(self):
        return len(self.directions)


def _greedy_indices(pts: np.ndarray, r: float) -> list[int]:
    """Scan-order greedy: keep a point iff it is > r from every kept point."""
    n, d = pts.shape
    if n == 0:
        return []
    keys = np.floor(pts / r).astype(np.int64)
    grid: dict[tuple, list[int]] = {}
    offsets = list(itertools.product((-1, 0, 1), repeat=d))
    r2 = r * r
    kept = []
    for i in range(n):
        key = tuple(keys[i])
        p = pts[i]
        ok = True
        for off in offsets:
            bucket = grid.get(tuple(k + o for k, o in zip(key, off)))
            if not bucket:
                continue
            diff = pts[bucket] - p
            if np.min(np.einsum("ij,ij->i", diff, diff)) <= r2:
                ok = False
                break
        if ok:
            kept.append(i)
            grid.setdefault(key, []).append(i)
    return kept


def greedy_packing(points, r: float) -> Packing:
    if r <= 0:
        raise ValueError("packing radius must be positive")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.size == 0:
        raise ValueError("cannot pack an empty point set")
    kept = np.asarray(_greedy_indices(pts, r), dtype=np.int64)
    return Packing(pts[kept], r, len(pts), kept)


def _sphere_cells(d: int, side: float) -> np.ndarray:
    """Integer indices of the grid cells (side ``side``) that meet the unit sphere."""
    k = int(math.ceil(1.0 / side)) + 1
    idx = np.arange(-k, k)
    lo1 = idx * side
    hi1 = lo1 + side
    # per-axis min and max of x^2 over the cell interval
    mn = np.where((lo1 <= 0) & (hi1 >= 0), 0.0, np.minimum(lo1 ** 2, hi1 ** 2))
    mx = np.maximum(lo1 ** 2, hi1 ** 2)
    if d == 1:
        keep = (mn <= 1.0) & (mx >= 1.0)
        return idx[keep][:, None]
    # enumerate the first d-1 axes densely, then solve for the last one
    heads = np.array(list(itertools.product(range(len(idx)), repeat=d - 1)), dtype=np.int64)
    hmn = mn[heads].sum(axis=1)
    hmx = mx[heads].sum(axis=1)
    alive = hmn <= 1.0
    heads, hmn, hmx = heads[alive], hmn[alive], hmx[alive]
    out = []
    for j in range(len(idx)):
        ok = (hmn + mn[j] <= 1.0) & (hmx + mx[j] >= 1.0)
        if ok.any():
            sel = heads[ok]
            out.append(np.column_stack([sel, np.full(len(sel), j)]))
    cells = np.concatenate(out) if out else np.zeros((0, d), dtype=np.int64)
    cells = cells[np.lexsort(cells.T[::-1])]
    return idx[cells]


def sphere_packing(d: int, r: float) -> Packing:
    """r-separated subset of the unit sphere S^{d-1}: grid of side r/sqrt(d), one radially
    normalised cell center per cell meeting the sphere, then greedy thinning.

    Separation is exact. Every sphere point lies within r of a candidate and every
    candidate within r of a kept point, so the covering radius is at most 2r
    (about 1.2r in practice).
    """
    if not 0.0 < r < 1.0:
        raise ValueError("sphere packing radius must lie in (0, 1)")
    if d < 1:
        raise ValueError("dimension must be positive")
    if d == 1:
        pts = np.array([[-1.0], [1.0]])
        return Packing(pts, r, 2, np.arange(2))
    side = r / math.sqrt(d)
    cells = _sphere_cells(d, side)
    centers = (cells + 0.5) * side
    norms = np.linalg.norm(centers, axis=1)
    cand = centers[norms > 0] / norms[norms > 0][:, None]
    kept = np.asarray(_greedy_indices(cand, r), dtype=np.int64)
    return Packing(cand[kept], r, len(cand), kept)


def direction_net(R: float, tau: float, d: int) -> DirectionNet:
    """Directions such that any p, q with |pq| <= R project within tau of each other
    along at least one of them."""
    if not R > tau > 0:
        raise ValueError("direction net needs R > tau > 0")
    resolution = min(tau / R, 0.25)
    # pack at half the resolution so the proven covering radius (2r) meets it
    pk = sphere_packing(d, resolution / 2)
    dirs = tuple(Direction(tuple(float(c) for c in row / np.linalg.norm(row))) for row in pk.points)
    return DirectionNet(dirs, resolution)


def separated_partition(points, r: float, R: float) -> list[np.ndarray]:
    """Split an r-separated set into R-separated groups by repeatedly extracting an
    R-packing of what is left. Returns index arrays into ``points``."""
    if not R > r:
        raise ValueError("partition radius R must exceed the packing radius r")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    remaining = np.arange(len(pts))
    groups = []
    while len(remaining):
        kept = np.asarray(_greedy_indices(pts[remaining], R), dtype=np.int64)
        groups.append(remaining[kept])
        mask = np.ones(len(remaining), dtype=bool)
        mask[kept] = False
        remaining = remaining[mask]
    return groups


def is_separated(pts: np.ndarray, r: float) -> bool:
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    if len(pts) < 2:
        return True
    diff = pts[:, None, :] - pts[None, :, :]
    dd = np.sqrt((diff ** 2).sum(-1))
    np.fill_diagonal(dd, np.inf)
    return bool(dd.min() > r)


def covering_radius(pts: np.ndarray, net: np.ndarray) -> float:
    """Largest distance from a row of ``pts`` to its nearest row of ``net``."""
    pts = np.atleast_2d(pts)
    worst = 0.0
    for start in range(0, len(pts), 2048):
        block = pts[start:start + 2048]
        dd = ((block[:, None, :] - net[None, :, :]) ** 2).sum(-1)
        worst = max(worst, float(np.sqrt(dd.min(axis=1)).max()))
    return worst
