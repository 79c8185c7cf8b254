"""Locality-sensitive orderings of [0,1)^d built from shifted eps-quadtrees.

An ordering is named by a shift, an eps-quadtree level class and an ordering of the
Ɛ-grid. Two points are compared at the node of that quadtree where they split: the
child cells holding them are ranked by the grid ordering. Everything runs on the
integer fixed-point coordinates, so comparisons are exact.

Bit convention: a shifted coordinate has ``width + 1`` bits; bit index 0 is the integer
bit and index ``b`` carries weight 2^-b. A depth-k quadtree cell (side 2^(1-k)) is
fixed by bits 0..k-1, so the eps-children of a depth-L node are read from bits
L..L+λ-1. Bits at negative indices or beyond ``width`` read as 0.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from functools import lru_cache
from typing import BinaryIO, Iterator, Sequence

import numpy as np

from .geometry import W_DEFAULT, ShiftedPoint, UnitPoint
from .grid_orders import TableOrdering, all_pairs_orderings, gap_beta, gap_orderings

LESS, EQUAL, GREATER = -1, 0, 1
MAGIC = b"LSO1"
FORMAT_VERSION = 1
# above this many rank entries the binary file stores parameters only
TABLE_ENTRY_CAP = 1 << 24


@dataclass(frozen=True)
class Constants:
    """Knobs the theory leaves open. ``None`` means the default formula."""

    # classic threshold: 2^-λ <= eps / classic_divisor, default 4 (d+1) sqrt(d)
    classic_divisor: float | None = None
    # gap threshold: 2^-λ < eps / gap_divisor, default 4 d^2
    gap_divisor: float | None = None


@dataclass(frozen=True)
class LsoParams:
    eps: float
    gamma: float | None
    d: int
    kind: str
    lam: int
    alpha: int
    width: int = W_DEFAULT
    constants: Constants = field(default_factory=Constants)

    @property
    def big_e(self) -> int:
        return 1 << self.lam

    @property
    def D(self) -> int:
        return 2 * math.ceil(self.d / 2)

    @property
    def shifts(self) -> tuple[int, ...]:
        """Per-coordinate fixed-point offset of each diagonal shift."""
        return tuple((i << self.width) // (self.D + 1) for i in range(self.D + 1))

    @classmethod
    def gap(cls, eps: float, gamma: float, d: int, width: int = W_DEFAULT,
            constants: Constants = Constants()) -> "LsoParams":
        _check_common(eps, d, width)
        if not 0 < gamma <= 0.5:
            raise ValueError("gamma must lie in (0, 1/2]")
        div = constants.gap_divisor or 4 * d * d
        lam = _min_lambda(eps / div, strict=True)
        alpha = max(1, math.floor(gamma * (1 << lam) / (2 * d * d)))
        return cls(eps, gamma, d, "gap", lam, alpha, width, constants)

    @classmethod
    def classic(cls, eps: float, d: int, width: int = W_DEFAULT,
                constants: Constants = Constants()) -> "LsoParams":
        _check_common(eps, d, width)
        div = constants.classic_divisor or 4 * (d + 1) * math.sqrt(d)
        lam = _min_lambda(eps / div, strict=False)
        return cls(eps, None, d, "classic", lam, 1, width, constants)


def _check_common(eps, d, width):
    if not 0 < eps <= 0.5:
        raise ValueError("eps must lie in (0, 1/2]")
    if not 1 <= d <= 8:
        raise ValueError("dimension must lie in [1, 8]")
    if not 8 <= width <= 60:
        raise ValueError("fixed-point width must lie in [8, 60]")


def _min_lambda(bound: float, strict: bool) -> int:
    lam = 1
    while not ((2.0 ** -lam < bound) if strict else (2.0 ** -lam <= bound)):
        lam += 1
    return lam


@dataclass(frozen=True, order=True)
class OrderingId:
    shift_index: int
    tree_index: int
    grid_order_index: int


# ------------------------------------------------------------------ bit primitives


def divergence_depth(p: ShiftedPoint, q: ShiftedPoint) -> int | None:
    """Deepest regular-quadtree depth whose cell holds both points; None if equal."""
    if p.width != q.width or len(p.coords) != len(q.coords):
        raise ValueError("points differ in width or dimension")
    x = 0
    for a, b in zip(p.coords, q.coords):
        x = max(x, a ^ b)
    if x == 0:
        return None
    return p.width - (x.bit_length() - 1)


def _extract(x: int, L: int, lam: int, width: int) -> int:
    top = width - L  # bit position of index L
    if top >= lam - 1:
        return (x >> (top - lam + 1)) & ((1 << lam) - 1)
    if top < 0:
        return 0
    return (x << (lam - 1 - top)) & ((1 << lam) - 1)


def grid_cell_of(p: ShiftedPoint, L: int, lam: int) -> tuple[int, ...]:
    """Child cell (per-coordinate indices in [0, 2^lam)) of p's depth-L ancestor."""
    if L < -lam or L > p.width:
        raise ValueError(f"depth {L} outside [-{lam}, {p.width}]")
    return tuple(_extract(x, L, lam, p.width) for x in p.coords)


def level_of(h: int, tree_index: int, lam: int) -> int:
    return tree_index + lam * ((h - tree_index) // lam)


def _linear(cell: Sequence[int], lam: int) -> int:
    out = 0
    for j, c in enumerate(cell):
        out |= c << (lam * j)
    return out


def _extract_array(x: np.ndarray, L: int, lam: int, width: int) -> np.ndarray:
    top = width - L
    mask = np.uint64((1 << lam) - 1)
    if top >= lam - 1:
        return (x >> np.uint64(top - lam + 1)) & mask
    if top < 0:
        return np.zeros_like(x)
    return (x << np.uint64(lam - 1 - top)) & mask


# ------------------------------------------------------------------------- family


class LsoFamily:
    """(D+1) shifts x λ level classes x grid orderings of the Ɛ-grid."""

    def __init__(self, params: LsoParams, grid_orders):
        self.params = params
        self.kind = params.kind
        self.grid_orders = grid_orders
        self._shift_arr = np.array(params.shifts, dtype=np.uint64)

    @property
    def m(self) -> int:
        p = self.params
        return (p.D + 1) * p.lam * len(self.grid_orders)

    def __len__(self):
        return self.m

    def ordering_id(self, i: int) -> OrderingId:
        if not 0 <= i < self.m:
            raise IndexError(i)
        g = len(self.grid_orders)
        rest, grid = divmod(i, g)
        shift, tree = divmod(rest, self.params.lam)
        return OrderingId(shift, tree, grid)

    def index_of(self, oid: OrderingId) -> int:
        self._check(oid)
        return (oid.shift_index * self.params.lam + oid.tree_index) * len(self.grid_orders) \
            + oid.grid_order_index

    def ids(self) -> Iterator[OrderingId]:
        return (self.ordering_id(i) for i in range(self.m))

    def _check(self, oid: OrderingId):
        p = self.params
        if not (0 <= oid.shift_index <= p.D and 0 <= oid.tree_index < p.lam
                and 0 <= oid.grid_order_index < len(self.grid_orders)):
            raise ValueError(f"invalid ordering id {oid}")

    @lru_cache(maxsize=4096)
    def _grid(self, index: int):
        return self.grid_orders[index]

    def shift(self, oid: OrderingId, p: UnitPoint) -> ShiftedPoint:
        return p.shifted([self.params.shifts[oid.shift_index]] * p.d)

    def compare(self, oid: OrderingId, p: UnitPoint, q: UnitPoint) -> int:
        self._check(oid)
        lam = self.params.lam
        sp, sq = self.shift(oid, p), self.shift(oid, q)
        h = divergence_depth(sp, sq)
        if h is None:
            return EQUAL
        L = level_of(h, oid.tree_index, lam)
        cp = _linear(grid_cell_of(sp, L, lam), lam)
        cq = _linear(grid_cell_of(sq, L, lam), lam)
        kp, kq = self._grid(oid.grid_order_index).keys([cp, cq])
        return LESS if kp < kq else GREATER

    def levels(self, tree_index: int) -> range:
        """Level classes a comparison under ``tree_index`` can land on."""
        lam = self.params.lam
        start = tree_index - lam if tree_index > 0 else 0
        return range(start, self.params.width + 1, lam)

    def cells_at(self, oid: OrderingId, coords: np.ndarray, L: int) -> np.ndarray:
        """Linear Ɛ-grid cells of many shifted points at level L."""
        lam, width = self.params.lam, self.params.width
        x = np.asarray(coords, dtype=np.uint64) + self._shift_arr[oid.shift_index]
        cells = np.zeros(len(x), dtype=np.int64)
        for j in range(x.shape[1]):
            cells |= _extract_array(x[:, j], L, lam, width).astype(np.int64) << (lam * j)
        return cells

    def key_matrix(self, oid: OrderingId, coords) -> np.ndarray:
        """Row i sorts like point i: lexicographic order of rows equals ``compare``."""
        self._check(oid)
        coords = np.atleast_2d(np.asarray(coords, dtype=np.uint64))
        grid = self._grid(oid.grid_order_index)
        levels = self.levels(oid.tree_index)
        cells = np.stack([self.cells_at(oid, coords, L) for L in levels], axis=1)
        keys = np.asarray(grid.keys(cells.ravel()), dtype=np.int64)
        return keys.reshape(cells.shape)

    def point_keys(self, coords) -> list[tuple[int, ...]]:
        """Keys of one point under every ordering, in ``ordering_id`` order."""
        x = np.asarray([coords], dtype=np.uint64)
        grid = self.grid_orders
        batch = getattr(grid, "keys_all", None)
        out = []
        for shift in range(self.params.D + 1):
            for tree in range(self.params.lam):
                oid = OrderingId(shift, tree, 0)
                cells = np.array([self.cells_at(oid, x, L)[0] for L in self.levels(tree)])
                if batch is not None:
                    out.extend(map(tuple, batch(cells).tolist()))
                else:
                    out.extend(tuple(np.asarray(self._grid(g).keys(cells)).tolist())
                               for g in range(len(grid)))
        return out

    def key(self, oid: OrderingId, p: UnitPoint) -> tuple[int, ...]:
        return tuple(int(k) for k in self.key_matrix(oid, [p.coords])[0])

    def argsort(self, oid: OrderingId, coords) -> np.ndarray:
        km = self.key_matrix(oid, coords)
        return np.lexsort(km.T[::-1])

    def candidates(self, p: UnitPoint, q: UnitPoint) -> list[OrderingId]:
        """Orderings worth trying first for the pair (p, q): every shift and level class,
        deepest common cell first, the natural level class first, with the grid
        set's own witness for the two cells."""
        lam = self.params.lam
        per_shift = []
        for s in range(self.params.D + 1):
            oid = OrderingId(s, 0, 0)
            h = divergence_depth(self.shift(oid, p), self.shift(oid, q))
            if h is None:
                return []
            per_shift.append((-h, s, h))
        per_shift.sort()
        out = []
        hint = getattr(self.grid_orders, "candidates", None)
        for _, s, h in per_shift:
            trees = sorted(range(lam), key=lambda r: (h - r) % lam)
            for r in trees:
                oid = OrderingId(s, r, 0)
                L = level_of(h, r, lam)
                sp, sq = self.shift(oid, p), self.shift(oid, q)
                cp = _linear(grid_cell_of(sp, L, lam), lam)
                cq = _linear(grid_cell_of(sq, L, lam), lam)
                for g in (hint(cp, cq) if hint else []):
                    out.append(OrderingId(s, r, g))
        return out


def predicted_m(params: LsoParams, build: bool = False) -> int | None:
    """Family size from the parameters alone. Gap families whose coarse side beta
    exceeds 1 need the directional orderings built; without ``build`` that gives None."""
    if params.kind == "classic":
        beta = 1
    else:
        beta = gap_beta(params.big_e, params.alpha, params.d)
    if beta > 1:
        if not build:
            return None
        grid = gap_orderings(params.big_e, params.alpha, params.d)
        return (params.D + 1) * params.lam * len(grid)
    n = (params.big_e // beta) ** params.d
    return (params.D + 1) * params.lam * max(1, (n + n % 2) // 2)


def m_lower_bound(params: LsoParams) -> int:
    """Exact size when known, else the size with a single bottom ordering."""
    m = predicted_m(params)
    if m is not None:
        return m
    beta = gap_beta(params.big_e, params.alpha, params.d)
    n = (params.big_e // beta) ** params.d
    return (params.D + 1) * params.lam * max(1, (n + n % 2) // 2)


def build_classic(eps: float, d: int, width: int = W_DEFAULT,
                  constants: Constants = Constants()) -> LsoFamily:
    params = LsoParams.classic(eps, d, width, constants)
    return LsoFamily(params, all_pairs_orderings(params.big_e, d))


def build_gap(eps: float, gamma: float, d: int, width: int = W_DEFAULT,
              constants: Constants = Constants(), **grid_kw) -> LsoFamily:
    params = LsoParams.gap(eps, gamma, d, width, constants)
    return LsoFamily(params, gap_orderings(params.big_e, params.alpha, d, **grid_kw))


# --------------------------------------------------------------------- binary form
#
# little endian throughout:
#   4 bytes  magic "LSO1"
#   u64 x 8  version, kind (0 classic, 1 gap), d, width, lam, alpha, n_tables, n_cells
#   f64 x 4  eps, gamma (NaN for classic), classic_divisor, gap_divisor (NaN = default)
#   u32 x n_tables * n_cells   rank tables, table-major (absent when n_tables == 0)
# n_tables == 0 means the grid orderings are rebuilt from the parameters on load.

_HEADER = struct.Struct("<4s8Q4d")


def _nan(x):
    return float("nan") if x is None else float(x)


def _opt(x):
    return None if math.isnan(x) else x


def serialize(family: LsoFamily, out: BinaryIO, tables: bool | None = None) -> None:
    p = family.params
    n_cells = p.big_e ** p.d
    g = len(family.grid_orders)
    if tables is None:
        tables = g * n_cells <= TABLE_ENTRY_CAP
    n_tables = g if tables else 0
    out.write(_HEADER.pack(MAGIC, FORMAT_VERSION, 0 if p.kind == "classic" else 1, p.d,
                           p.width, p.lam, p.alpha, n_tables, n_cells, p.eps, _nan(p.gamma),
                           _nan(p.constants.classic_divisor), _nan(p.constants.gap_divisor)))
    for i in range(n_tables):
        out.write(np.asarray(family.grid_orders[i].table, dtype="<u4").tobytes())


def deserialize(src: BinaryIO) -> LsoFamily:
    raw = src.read(_HEADER.size)
    if len(raw) != _HEADER.size:
        raise ValueError("truncated family header")
    (magic, version, kind, d, width, lam, alpha, n_tables, n_cells,
     eps, gamma, cdiv, gdiv) = _HEADER.unpack(raw)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported format version {version}")
    constants = Constants(_opt(cdiv), _opt(gdiv))
    if kind == 0:
        fam = build_classic(eps, d, width, constants)
    elif kind == 1:
        fam = build_gap(eps, gamma, d, width, constants)
    else:
        raise ValueError(f"unknown family kind {kind}")
    p = fam.params
    if (p.lam, p.alpha, p.big_e ** p.d) != (lam, alpha, n_cells):
        raise ValueError("stored parameters disagree with the rebuilt family")
    if n_tables:
        body = src.read(4 * n_tables * n_cells)
        if len(body) != 4 * n_tables * n_cells:
            raise ValueError("truncated rank tables")
        arr = np.frombuffer(body, dtype="<u4").reshape(n_tables, n_cells).astype(np.int64)
        fam = LsoFamily(p, [TableOrdering(p.big_e, d, row) for row in arr])
    return fam
