"""Dynamic locality graph: one sorted list per ordering, edges = consecutive pairs.

The same graph serves as the (1+eps) spanner and as the candidate set for the
bichromatic closest pair; both just pick the family parameters.
"""
from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path
from sortedcontainers import SortedList

from .geometry import UnitPoint
from .lso import LsoFamily, LsoParams, build_gap, m_lower_bound

MAX_ORDERINGS = 20_000


class Color(enum.Enum):
    RED = "R"
    BLUE = "B"
    NONE = "N"


class FamilyTooLarge(RuntimeError):
    def __init__(self, m: int, cap: int):
        super().__init__(f"family has {m} orderings, locality graphs are capped at {cap}")
        self.m, self.cap = m, cap


@dataclass(frozen=True)
class PointRecord:
    id: int
    point: UnitPoint
    color: Color = Color.NONE


def _pair(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


@dataclass
class EdgeDelta:
    """Distinct edges that appeared or vanished during one update."""

    added: set = field(default_factory=set)
    removed: set = field(default_factory=set)


class LocalityGraph:
    def __init__(self, family: LsoFamily, max_orderings: int = MAX_ORDERINGS):
        if family.m > max_orderings:
            raise FamilyTooLarge(family.m, max_orderings)
        self.family = family
        self.ids = list(family.ids())
        self.lists = [SortedList() for _ in self.ids]
        self.edges: Counter = Counter()
        self.adj: dict[int, Counter] = {}
        self.records: dict[int, PointRecord] = {}
        self._keys: dict[int, list[tuple]] = {}

    @property
    def n(self) -> int:
        return len(self.records)

    def _point_keys(self, p: UnitPoint) -> list[tuple]:
        return self.family.point_keys(p.coords)

    def _bump(self, a: int, b: int, by: int, delta: EdgeDelta):
        e = _pair(a, b)
        before = self.edges[e]
        after = before + by
        if after:
            self.edges[e] = after
        else:
            del self.edges[e]
        for u, v in ((a, b), (b, a)):
            nb = self.adj.setdefault(u, Counter())
            nb[v] += by
            if not nb[v]:
                del nb[v]
        if before == 0 and after > 0:
            if e in delta.removed:
                delta.removed.discard(e)
            else:
                delta.added.add(e)
        elif before > 0 and after == 0:
            if e in delta.added:
                delta.added.discard(e)
            else:
                delta.removed.add(e)

    def insert(self, rec: PointRecord) -> EdgeDelta:
        if rec.id in self.records:
            raise KeyError(f"id {rec.id} is already live")
        keys = self._point_keys(rec.point)
        delta = EdgeDelta()
        self.adj.setdefault(rec.id, Counter())
        for sl, k in zip(self.lists, keys):
            item = (k, rec.id)
            pos = sl.bisect_left(item)
            a = sl[pos - 1][1] if pos > 0 else None
            b = sl[pos][1] if pos < len(sl) else None
            if a is not None and b is not None:
                self._bump(a, b, -1, delta)
            if a is not None:
                self._bump(a, rec.id, 1, delta)
            if b is not None:
                self._bump(rec.id, b, 1, delta)
            sl.add(item)
        self.records[rec.id] = rec
        self._keys[rec.id] = keys
        return delta

    def delete(self, pid: int) -> EdgeDelta:
        if pid not in self.records:
            raise KeyError(f"id {pid} is not live")
        delta = EdgeDelta()
        for sl, k in zip(self.lists, self._keys[pid]):
            pos = sl.index((k, pid))
            a = sl[pos - 1][1] if pos > 0 else None
            b = sl[pos + 1][1] if pos + 1 < len(sl) else None
            if a is not None:
                self._bump(a, pid, -1, delta)
            if b is not None:
                self._bump(pid, b, -1, delta)
            if a is not None and b is not None:
                self._bump(a, b, 1, delta)
            del sl[pos]
        del self.records[pid], self._keys[pid], self.adj[pid]
        return delta

    def max_degree(self) -> int:
        return max((len(nb) for nb in self.adj.values()), default=0)

    def edge_count(self) -> int:
        return len(self.edges)

    def length(self, e: tuple[int, int]) -> float:
        p = np.array(self.records[e[0]].point.to_floats())
        q = np.array(self.records[e[1]].point.to_floats())
        return float(np.linalg.norm(p - q))


def from_scratch_edges(family: LsoFamily, records) -> Counter:
    """Edge multiset recomputed by sorting every ordering from nothing."""
    records = list(records)
    out: Counter = Counter()
    if len(records) < 2:
        return out
    coords = np.array([r.point.coords for r in records], dtype=np.uint64)
    ids = np.array([r.id for r in records])
    for oid in family.ids():
        km = family.key_matrix(oid, coords)
        order = np.lexsort(np.vstack([ids, km.T[::-1]]))
        for a, b in zip(ids[order][:-1], ids[order][1:]):
            out[_pair(int(a), int(b))] += 1
    return out


# ------------------------------------------------------------------------------ BCP


def _guarded_gap(eps, gamma, d, max_orderings, **kw) -> LsoFamily:
    m = m_lower_bound(LsoParams.gap(eps, gamma, d))
    if m > max_orderings:
        raise FamilyTooLarge(m, max_orderings)
    return build_gap(eps, gamma, d, **kw)


def bcp_family(eps: float, d: int, max_orderings: int = MAX_ORDERINGS, **kw) -> LsoFamily:
    return _guarded_gap(eps / 4, 0.125, d, max_orderings, **kw)


def spanner_family(eps: float, d: int, max_orderings: int = MAX_ORDERINGS, **kw) -> LsoFamily:
    return _guarded_gap(eps / 32, 0.125, d, max_orderings, **kw)


class BcpState:
    """Shortest bichromatic edge of a locality graph, kept in an ordered structure
    with true deletion so it never holds dead edges."""

    def __init__(self, graph: LocalityGraph):
        self.graph = graph
        self.heap = SortedList()
        self._len: dict[tuple[int, int], float] = {}

    def _bichromatic(self, e) -> bool:
        ca = self.graph.records[e[0]].color
        cb = self.graph.records[e[1]].color
        return {ca, cb} == {Color.RED, Color.BLUE}

    def _apply(self, delta: EdgeDelta):
        for e in delta.removed:
            w = self._len.pop(e, None)
            if w is not None:
                self.heap.remove((w, e))
        for e in delta.added:
            if self._bichromatic(e):
                w = self.graph.length(e)
                self._len[e] = w
                self.heap.add((w, e))

    def insert(self, rec: PointRecord) -> EdgeDelta:
        delta = self.graph.insert(rec)
        self._apply(delta)
        return delta

    def delete(self, pid: int) -> EdgeDelta:
        # lengths of removed edges are cached, so the record may go first
        delta = self.graph.delete(pid)
        self._apply(delta)
        return delta

    @property
    def current(self):
        return self.heap[0] if self.heap else None


def bcp_query(state: BcpState):
    """(red id, blue id, length) of the shortest bichromatic edge, or None."""
    top = state.current
    if top is None:
        return None
    w, (a, b) = top
    if state.graph.records[a].color is Color.BLUE:
        a, b = b, a
    return a, b, w


def brute_force_bcp(records) -> float | None:
    red = np.array([r.point.to_floats() for r in records if r.color is Color.RED])
    blue = np.array([r.point.to_floats() for r in records if r.color is Color.BLUE])
    if len(red) == 0 or len(blue) == 0:
        return None
    return float(np.linalg.norm(red[:, None, :] - blue[None, :, :], axis=2).min())


# -------------------------------------------------------------------------- spanner


def spanner_edges(graph: LocalityGraph) -> list[tuple[int, int, float]]:
    return [(a, b, graph.length((a, b))) for a, b in sorted(graph.edges)]


@dataclass
class StretchReport:
    max_stretch: float
    pair: tuple[int, int] | None


def stretch_check(edges, points: dict) -> StretchReport:
    """Exact all-pairs shortest paths over ``edges`` (id, id, weight); ``points`` maps
    id -> coordinates. Disconnected pairs give infinite stretch."""
    ids = sorted(points)
    if len(ids) > 2000:
        raise ValueError("stretch check is capped at 2000 points")
    if len(ids) < 2:
        return StretchReport(1.0, None)
    index = {pid: k for k, pid in enumerate(ids)}
    n = len(ids)
    rows = [index[a] for a, b, _ in edges] + [index[b] for a, b, _ in edges]
    cols = [index[b] for a, b, _ in edges] + [index[a] for a, b, _ in edges]
    w = [x for *_, x in edges] * 2
    graph = csr_matrix((w, (rows, cols)), shape=(n, n))
    dg = shortest_path(graph, method="D", directed=False)
    P = np.array([points[i] for i in ids], dtype=float)
    de = np.linalg.norm(P[:, None, :] - P[None, :, :], axis=2)
    iu = np.triu_indices(n, 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(de[iu] > 0, dg[iu] / de[iu], np.where(dg[iu] == 0, 1.0, np.inf))
    k = int(np.argmax(ratio))
    return StretchReport(float(ratio[k]), (ids[iu[0][k]], ids[iu[1][k]]))


def floyd_warshall_stretch(edges, points: dict) -> float:
    """Plain O(n^3) cross-check of :func:`stretch_check` for small n."""
    ids = sorted(points)
    index = {pid: k for k, pid in enumerate(ids)}
    n = len(ids)
    dist = np.full((n, n), np.inf)
    np.fill_diagonal(dist, 0.0)
    for a, b, w in edges:
        i, j = index[a], index[b]
        dist[i, j] = dist[j, i] = min(dist[i, j], w)
    for k in range(n):
        dist = np.minimum(dist, dist[:, k:k + 1] + dist[k:k + 1, :])
    P = np.array([points[i] for i in ids], dtype=float)
    worst = 1.0
    for i in range(n):
        for j in range(i + 1, n):
            e = float(np.linalg.norm(P[i] - P[j]))
            worst = max(worst, dist[i, j] / e if e > 0 else (1.0 if dist[i, j] == 0 else np.inf))
    return worst
