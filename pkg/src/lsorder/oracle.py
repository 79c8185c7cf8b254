"""Brute-force verifiers and lower-bound instance generators.

Verifiers look at the actual orderings (rank tables or comparator keys) and never at
how a family was constructed. Families may offer ``candidates`` hints; those only
decide which orderings are tried first, every pair still needs a checked witness.
All pair loops run in lexicographic pair order and stop at the first violation.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np

from .geometry import segment_distances
from .grid_orders import all_centers, delinearize

TOL = 1e-9


@dataclass
class LocalityViolation:
    pair: tuple[Any, Any]
    ordering: Any
    witness: Any
    # hippodrome | ball | diameter | gap for point families; segment | distance |
    # proximity for grid orderings
    predicate: str
    detail: str = ""

    def to_json(self) -> dict:
        out = asdict(self)
        return _jsonable(out)


@dataclass
class VerificationReport:
    passed: bool
    mode: str
    pairs_checked: int = 0
    violation: LocalityViolation | None = None
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "schema": 1,
            "mode": self.mode,
            "passed": self.passed,
            "pairs_checked": self.pairs_checked,
            "violation": self.violation.to_json() if self.violation else None,
            **_jsonable(self.extra),
        }

    def __bool__(self):
        return self.passed


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    return x


# ------------------------------------------------------------------- grid lemmas


def segment_hits_boxes(a, b, lo, hi, tol: float = TOL) -> np.ndarray:
    """Does the closed segment ab meet each axis-parallel box [lo_i, hi_i]?"""
    a, b = np.asarray(a, float), np.asarray(b, float)
    lo, hi = np.atleast_2d(lo) - tol, np.atleast_2d(hi) + tol
    smin = np.zeros(len(lo))
    smax = np.ones(len(lo))
    for j in range(len(a)):
        step = b[j] - a[j]
        if abs(step) < 1e-15:
            inside = (lo[:, j] <= a[j]) & (a[j] <= hi[:, j])
            smax = np.where(inside, smax, -1.0)
            continue
        s1 = (lo[:, j] - a[j]) / step
        s2 = (hi[:, j] - a[j]) / step
        smin = np.maximum(smin, np.minimum(s1, s2))
        smax = np.minimum(smax, np.maximum(s1, s2))
    return smin <= smax


def cell_set_distance(c1, c2, t: int, d: int):
    """Euclidean distance between two closed cells (or arrays of cells) of a t-grid."""
    g = np.abs(delinearize(c1, t, d) - delinearize(c2, t, d)) - 1
    g = np.maximum(g, 0) / t
    return np.sqrt((g ** 2).sum(axis=-1))


class _GridContext:
    def __init__(self, t: int, d: int):
        self.t, self.d = t, d
        self.centers = all_centers(t, d)
        coords = delinearize(np.arange(t ** d), t, d)
        self.lo = coords / t
        self.hi = (coords + 1) / t


def _between(table: np.ndarray, seq: np.ndarray, a: int, b: int) -> np.ndarray:
    ra, rb = table[a], table[b]
    if ra > rb:
        ra, rb = rb, ra
    return seq[ra + 1:rb]


def _check_grid_conclusion(ctx: _GridContext, between: np.ndarray, a: int, b: int):
    """None if the between-cells satisfy both properties, else (predicate, cell)."""
    if len(between) == 0:
        return None
    ca, cb = ctx.centers[a], ctx.centers[b]
    hits = segment_hits_boxes(ca, cb, ctx.lo[between], ctx.hi[between])
    if not hits.all():
        return "segment", int(between[np.argmin(hits)])
    limit = float(np.linalg.norm(ca - cb)) + TOL
    pts = ctx.centers[between]
    for i in range(len(pts)):
        far = np.linalg.norm(pts[i:] - pts[i], axis=1)
        if far.max() > limit:
            return "distance", int(between[i])
    return None


def _tables(orders) -> tuple[np.ndarray, np.ndarray]:
    tables = np.stack([np.asarray(o.table) for o in orders])
    seqs = np.empty_like(tables)
    rows = np.arange(tables.shape[1])
    for i, tab in enumerate(tables):
        seqs[i, tab] = rows
    return tables, seqs


def _search_grid(orders, tables, seqs, a, b, check, hint):
    tried = set()
    last = None
    for i in list(hint) + list(range(len(tables))):
        if i in tried:
            continue
        tried.add(i)
        bad = check(_between(tables[i], seqs[i], a, b), a, b)
        if bad is None:
            return i, None
        last = (i, bad)
    return None, last


def verify_grid_conclusion(orders, t: int, d: int) -> VerificationReport:
    """Every cell pair needs an ordering whose between-cells stab the centers'
    segment and are pairwise no farther apart than the two centers."""
    if t ** d > 4096:
        raise ValueError("grid verification is capped at 4096 cells")
    ctx = _GridContext(t, d)
    orders = list(orders) if not hasattr(orders, "candidates") else orders
    tables, seqs = _tables(orders)
    hints = getattr(orders, "candidates", None)
    checked = 0
    for a, b in itertools.combinations(range(t ** d), 2):
        hint = hints(a, b) if hints else []
        found, last = _search_grid(orders, tables, seqs, a, b,
                                   lambda btw, x, y: _check_grid_conclusion(ctx, btw, x, y), hint)
        checked += 1
        if found is None:
            i, (pred, cell) = last
            return VerificationReport(False, "grid", checked, LocalityViolation(
                (a, b), i, cell, pred, "no ordering satisfies the grid lemma for this pair"))
    return VerificationReport(True, "grid", checked, extra={"orderings": len(tables)})


def _check_gap_cells(ctx, between, a, b, reach):
    if len(between) == 0:
        return None
    ca, cb = ctx.centers[a], ctx.centers[b]
    hits = segment_hits_boxes(ca, cb, ctx.lo[between], ctx.hi[between])
    if not hits.all():
        return "segment", int(between[np.argmin(hits)])
    near = np.minimum(cell_set_distance(between, a, ctx.t, ctx.d),
                      cell_set_distance(between, b, ctx.t, ctx.d)) <= reach + TOL
    if not near.all():
        return "proximity", int(between[np.argmin(near)])
    return None


def verify_gap_orderings(gset) -> VerificationReport:
    """Pairs whose cells are >= alpha cell-sides apart need an ordering whose between
    cells stab the centers' segment and lie within (alpha/4) cell-sides of an end."""
    t, d, alpha = gset.t, gset.d, gset.alpha
    if t ** d > 4096:
        raise ValueError("grid verification is capped at 4096 cells")
    ctx = _GridContext(t, d)
    delta = 1.0 / t
    reach = alpha / 4 * delta
    members = [gset[i] for i in range(len(gset))]
    tables, seqs = _tables(members)
    checked = 0
    for a, b in itertools.combinations(range(t ** d), 2):
        if cell_set_distance(a, b, t, d) < alpha * delta - TOL:
            continue
        found, last = _search_grid(members, tables, seqs, a, b,
                                   lambda btw, x, y: _check_gap_cells(ctx, btw, x, y, reach),
                                   gset.candidates(a, b))
        checked += 1
        if found is None:
            i, (pred, cell) = last
            return VerificationReport(False, "gaporders", checked, LocalityViolation(
                (a, b), i, cell, pred, "no ordering satisfies the gap lemma for this pair"))
    return VerificationReport(True, "gaporders", checked, extra={"orderings": len(tables)})


# ------------------------------------------------------------------ point families


def naive_compare(family, oid, p, q) -> int:
    """Reference comparator: walk the regular quadtree of [0,2)^d with exact rationals,
    halving intervals until the shifted points separate."""
    from fractions import Fraction

    params = family.params
    lam, big_e = params.lam, params.big_e
    scale = Fraction(1, 1 << params.width)
    nu = params.shifts[oid.shift_index]
    xs = [(a + nu) * scale for a in p.coords]
    ys = [(b + nu) * scale for b in q.coords]
    if xs == ys:
        return 0
    lo = [Fraction(0)] * len(xs)
    side = Fraction(2)
    h = 0
    while True:
        half = side / 2
        cx = [int((x - l) // half) for x, l in zip(xs, lo)]
        cy = [int((y - l) // half) for y, l in zip(ys, lo)]
        if cx != cy:
            break
        lo = [l + c * half for l, c in zip(lo, cx)]
        side, h = half, h + 1
    L = oid.tree_index + lam * ((h - oid.tree_index) // lam)
    node = Fraction(2) / Fraction(2) ** L  # side 2^(1-L), works for negative L too

    def cell(zs):
        lin = 0
        for j, z in enumerate(zs):
            base = (z // node) * node
            lin += int((z - base) // (node / big_e)) * big_e ** j
        return lin

    grid = family.grid_orders[oid.grid_order_index]
    kp, kq = grid.keys([cell(xs), cell(ys)])
    return -1 if kp < kq else 1


class _PointContext:
    """Real coordinates plus per-ordering positions, cached across pairs."""

    def __init__(self, family, points):
        self.family = family
        self.points = list(points)
        self.coords = np.array([p.coords for p in self.points], dtype=np.uint64)
        self.real = np.array([p.to_floats() for p in self.points], dtype=float)
        self._pos: dict = {}

    def positions(self, oid) -> np.ndarray:
        pos = self._pos.get(oid)
        if pos is None:
            order = self.family.argsort(oid, self.coords)
            pos = np.empty(len(order), dtype=np.int64)
            pos[order] = np.arange(len(order))
            if len(self._pos) > 20000:
                self._pos.clear()
            self._pos[oid] = pos
        return pos

    def between(self, oid, i: int, j: int) -> np.ndarray:
        pos = self.positions(oid)
        lo, hi = sorted((pos[i], pos[j]))
        return np.flatnonzero((pos > lo) & (pos < hi))


def _classic_check(ctx, btw, i, j, eps):
    if len(btw) == 0:
        return None
    P = ctx.real
    ell = np.linalg.norm(P[i] - P[j])
    near = np.minimum(np.linalg.norm(P[btw] - P[i], axis=1),
                      np.linalg.norm(P[btw] - P[j], axis=1))
    bad = near > eps * ell + TOL
    if bad.any():
        return "ball", int(btw[np.argmax(bad)])
    return None


def _gap_check(ctx, btw, i, j, eps, gamma):
    if len(btw) == 0:
        return None
    P = ctx.real
    ell = float(np.linalg.norm(P[i] - P[j]))
    hip = segment_distances(P[btw], P[i], P[j]) > eps * ell + TOL
    if hip.any():
        return "hippodrome", int(btw[np.argmax(hip)])
    dp = np.linalg.norm(P[btw] - P[i], axis=1)
    dq = np.linalg.norm(P[btw] - P[j], axis=1)
    ball = np.minimum(dp, dq) > gamma * ell + TOL
    if ball.any():
        return "ball", int(btw[np.argmax(ball)])
    pts = P[btw]
    for k in range(len(pts)):
        far = np.linalg.norm(pts[k:] - pts[k], axis=1) > (1 + eps) * ell + TOL
        if far.any():
            return "diameter", int(btw[k])
    near_p = np.append(btw[dp <= dq], i)
    near_q = np.append(btw[dp > dq], j)
    gap = np.linalg.norm(P[near_p][:, None, :] - P[near_q][None, :, :], axis=2)
    if gap.min() < (1 - 2 * gamma) * ell - TOL:
        k = np.unravel_index(np.argmin(gap), gap.shape)
        return "gap", int(near_p[k[0]])
    return None


def _verify_points(family, points, check, mode, scan_limit):
    ctx = _PointContext(family, points)
    n = len(ctx.points)
    checked = 0
    exhausted = True
    for i in range(n):
        for j in range(i + 1, n):
            checked += 1
            first_fail = None
            tried = set()
            hints = family.candidates(ctx.points[i], ctx.points[j])
            scan = (family.ordering_id(k) for k in range(min(family.m, scan_limit or family.m)))
            found = False
            for oid in itertools.chain(hints, scan):
                if oid in tried:
                    continue
                tried.add(oid)
                bad = check(ctx, ctx.between(oid, i, j), i, j)
                if bad is None:
                    found = True
                    break
                if first_fail is None:
                    first_fail = (oid, bad)
            if found:
                continue
            if scan_limit and family.m > scan_limit:
                exhausted = False
            if first_fail is None:
                # identical fixed-point points: every ordering ties them
                continue
            oid, (pred, u) = first_fail
            return VerificationReport(False, mode, checked, LocalityViolation(
                (i, j), asdict(oid), u, pred,
                f"{len(tried)} orderings tried, none is a witness"),
                extra={"exhaustive_scan": exhausted, "m": family.m})
    return VerificationReport(True, mode, checked, extra={"m": family.m})


def verify_locality(family, points, eps: float, scan_limit: int | None = 200_000):
    """Classic locality: per pair, some ordering keeps every between-point within
    eps * |pq| of p or of q. Points are UnitPoints; indices refer to their order."""
    if len(points) > 500:
        raise ValueError("point verification is capped at 500 points")
    return _verify_points(family, points,
                          lambda ctx, btw, i, j: _classic_check(ctx, btw, i, j, eps),
                          "classic", scan_limit)


def verify_locality_gap(family, points, eps: float, gamma: float,
                        scan_limit: int | None = 200_000):
    """(eps, gamma)-locality plus the between-diameter and endpoint-cluster gap bounds."""
    if len(points) > 500:
        raise ValueError("point verification is capped at 500 points")
    return _verify_points(family, points,
                          lambda ctx, btw, i, j: _gap_check(ctx, btw, i, j, eps, gamma),
                          "gap", scan_limit)


def witness_ordering(family, points, i: int, j: int, eps: float, gamma: float):
    """First ordering (hints, then scan) satisfying the gap predicates for pair (i, j)."""
    ctx = _PointContext(family, points)
    ids = itertools.chain(family.candidates(ctx.points[i], ctx.points[j]),
                          (family.ordering_id(k) for k in range(family.m)))
    for oid in ids:
        if _gap_check(ctx, ctx.between(oid, i, j), i, j, eps, gamma) is None:
            return oid, ctx
    return None, ctx


def bridge_length(family, points, i: int, j: int, eps: float, gamma: float) -> float:
    """Longest consecutive hop from p to q in the pair's witness ordering, as a fraction
    of |pq|. The gap property promises at least 1 - 2 gamma."""
    oid, ctx = witness_ordering(family, points, i, j, eps, gamma)
    if oid is None:
        return 0.0
    pos = ctx.positions(oid)
    lo, hi = sorted((pos[i], pos[j]))
    chain = np.argsort(pos)[lo:hi + 1]
    hops = np.linalg.norm(np.diff(ctx.real[chain], axis=0), axis=1)
    return float(hops.max() / np.linalg.norm(ctx.real[i] - ctx.real[j]))


# ------------------------------------------------------------ lower-bound instances


@dataclass
class LowerBoundReport:
    points: np.ndarray
    premise_holds: bool
    implied_bound: float
    detail: dict = field(default_factory=dict)


def lower_bound_grid_instance(eps: float, d: int) -> LowerBoundReport:
    """The integer grid {1..m}^d, m = floor((1/eps)/d): no third point lies in either
    eps-ball of any pair, so every pair needs its own adjacency."""
    m = math.floor((1 / eps) / d)
    if m < 2:
        raise ValueError(f"m = {m} < 2: eps too large for dimension {d}")
    if m ** d > 10 ** 5:
        raise ValueError("instance larger than 10^5 points")
    axes = [np.arange(1, m + 1, dtype=float)] * d
    P = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    n = len(P)
    # P ∩ (B(p, eps l) ∪ B(q, eps l)) = {p, q} for every pair iff, for every p,
    # eps * (farthest distance from p) < distance from p to its nearest neighbour
    holds = True
    worst = 0.0
    for start in range(0, n, 512):
        block = P[start:start + 512]
        dd = np.linalg.norm(block[:, None, :] - P[None, :, :], axis=2)
        far = dd.max(axis=1)
        dd[np.arange(len(block)), np.arange(start, start + len(block))] = np.inf
        nn = dd.min(axis=1)
        ratio = eps * far / nn
        worst = max(worst, float(ratio.max()))
        holds &= bool((ratio < 1 - TOL).all())
    return LowerBoundReport(P / (m + 1), holds, n / 2,
                            {"m": m, "n": n, "pairs": n * (n - 1) // 2,
                             "max_ball_over_nn": worst})


def lower_bound_sphere_instance(eps: float, d: int) -> LowerBoundReport:
    """A (4 eps)-packing N of the unit sphere plus the origin o: the eps-hippodrome of
    each segment op holds no other point, so an ordering serves at most two pairs op."""
    from .packing import sphere_packing

    if 4 * eps >= 1:
        raise ValueError("need 4 eps < 1")
    N = sphere_packing(d, 4 * eps).points
    origin = np.zeros(d)
    P = np.vstack([origin, N])
    holds = True
    offender = None
    for k, p in enumerate(N, start=1):
        others = np.delete(np.arange(len(P)), [0, k])
        if len(others) == 0:
            continue
        dist = segment_distances(P[others], origin, p)
        if (dist <= eps + TOL).any():
            holds = False
            offender = (k, int(others[np.argmin(dist)]))
            break
    return LowerBoundReport(P, holds, len(N) / 2,
                            {"packing_size": len(N), "offender": offender})


def spanner_edge_lower_bound_report(eps_values: Sequence[float], d: int,
                                    n: int | None = None, gamma: float = 0.125) -> list[dict]:
    """Family size m of the (eps, gamma) gap construction next to the Omega(Ɛ^{d-1})
    floor on locality-graph spanners, Ɛ = 1/eps."""
    from .lso import LsoParams, predicted_m

    rows = []
    for eps in eps_values:
        p = LsoParams.gap(eps, gamma, d)
        m = predicted_m(p)
        floor = round((1 / eps) ** (d - 1))
        row = {"eps": eps, "d": d, "lam": p.lam, "grid_side": p.big_e, "alpha": p.alpha,
               "m": m, "floor": floor, "m_over_floor": (m / floor) if m else None}
        if n is not None:
            row["edge_floor"] = n * floor
            row["edge_cap"] = m * (n - 1) if m else None
        rows.append(row)
    return rows
