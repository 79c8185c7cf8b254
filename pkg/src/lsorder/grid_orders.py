"""Orderings of the cells of a t-grid.

Cells are addressed by a linear index ``sum(coords[j] * t**j)``. An ordering exposes
``keys(cells)``, any integer array that sorts cells in ordering order; ``table`` is the
rank permutation itself. Walecki orderings compute ranks arithmetically, directional
orderings store their table, composed (gap) orderings derive keys from the two levels.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from functools import cached_property
from collections.abc import Sequence

import numpy as np

from .packing import _greedy_indices, direction_net, separated_partition, sphere_packing

UNTOUCHED = np.iinfo(np.int32).max
# explicit directional tables are built only up to this many cells
DIRECTIONAL_CELL_CAP = 1 << 16


@dataclass(frozen=True)
class CellIndex:
    coords: tuple[int, ...]
    t: int

    def __post_init__(self):
        if any(not 0 <= c < self.t for c in self.coords):
            raise ValueError(f"cell {self.coords} outside a {self.t}-grid")

    @property
    def linearized(self) -> int:
        return linearize(self.coords, self.t)

    @classmethod
    def from_linear(cls, idx: int, t: int, d: int) -> "CellIndex":
        return cls(tuple(int(c) for c in delinearize(idx, t, d)), t)


def linearize(coords, t: int):
    coords = np.asarray(coords, dtype=np.int64)
    weights = t ** np.arange(coords.shape[-1], dtype=np.int64)
    out = coords @ weights
    return int(out) if out.ndim == 0 else out


def delinearize(idx, t: int, d: int) -> np.ndarray:
    idx = np.asarray(idx, dtype=np.int64)
    return np.stack([(idx // t ** j) % t for j in range(d)], axis=-1)


def cell_center(c, t: int, d: int | None = None) -> np.ndarray:
    """Center of cell ``c`` of the t-grid of the unit cube."""
    if isinstance(c, CellIndex):
        coords = np.asarray(c.coords)
    elif np.ndim(c) == 0:
        if d is None:
            raise ValueError("a linear cell index needs the dimension")
        coords = delinearize(int(c), t, d)
    else:
        coords = np.asarray(c)
    return (coords + 0.5) / t


def all_centers(t: int, d: int) -> np.ndarray:
    return (delinearize(np.arange(t ** d), t, d) + 0.5) / t


# --------------------------------------------------------------------------- Walecki


def walecki_orderings(n: int) -> list[tuple[int, ...]]:
    """The n/2 zigzag Hamiltonian paths j, j+1, j-1, j+2, ... (mod n) of K_n."""
    if n < 2 or n % 2:
        raise ValueError("Walecki decomposition needs an even n >= 2")
    paths = []
    for j in range(n // 2):
        seq = [j]
        for k in range(1, n):
            off = (k + 1) // 2 if k % 2 else -(k // 2)
            seq.append((j + off) % n)
        paths.append(tuple(seq))
    return paths


def walecki_rank(v, j, n: int):
    """Position of vertex ``v`` on zigzag path ``j`` of K_n (n even)."""
    r = (np.asarray(v, dtype=np.int64) - j) % n
    half = n // 2
    out = np.where(r == 0, 0, np.where(r <= half, 2 * r - 1, 2 * (n - r)))
    return int(out) if out.ndim == 0 else out


def walecki_path_for_pair(a: int, b: int, n: int) -> int:
    """Index of the unique zigzag path on which a and b are consecutive."""
    return ((a + b) % n) // 2


class GridOrdering:
    """An ordering of the t^d cells of a t-grid."""

    t: int
    d: int

    @property
    def n_cells(self) -> int:
        return self.t ** self.d

    def keys(self, cells) -> np.ndarray:
        raise NotImplementedError

    @cached_property
    def table(self) -> np.ndarray:
        """rank[linear cell] as an explicit permutation of [0, t^d)."""
        order = self.sequence
        rank = np.empty(self.n_cells, dtype=np.int64)
        rank[order] = np.arange(self.n_cells)
        return rank

    @cached_property
    def sequence(self) -> np.ndarray:
        """Cells listed in ordering order."""
        return np.argsort(self.keys(np.arange(self.n_cells)), kind="stable")

    def rank(self, cell: int) -> int:
        return int(self.table[cell])


class TableOrdering(GridOrdering):
    def __init__(self, t: int, d: int, table: np.ndarray):
        self.t, self.d = t, d
        table = np.asarray(table, dtype=np.int64)
        if table.shape != (t ** d,):
            raise ValueError("rank table has the wrong length")
        self.__dict__["table"] = table

    def keys(self, cells) -> np.ndarray:
        return self.table[np.asarray(cells, dtype=np.int64)]

    @cached_property
    def sequence(self) -> np.ndarray:
        seq = np.empty(self.n_cells, dtype=np.int64)
        seq[self.table] = np.arange(self.n_cells)
        return seq


class WaleckiOrdering(GridOrdering):
    """Zigzag path ``path`` over the cells; odd cell counts get a dummy cell that is
    dropped from every path."""

    def __init__(self, t: int, d: int, path: int):
        self.t, self.d, self.path = t, d, path
        n = t ** d
        self.padded = n + (n % 2)
        self.dummy_pos = walecki_rank(n, path, self.padded) if self.padded != n else None

    def keys(self, cells) -> np.ndarray:
        r = walecki_rank(np.asarray(cells, dtype=np.int64), self.path, self.padded)
        if self.dummy_pos is not None:
            r = r - (r > self.dummy_pos)
        return np.asarray(r)

    @cached_property
    def table(self) -> np.ndarray:
        return self.keys(np.arange(self.n_cells))


class AllPairsSet(Sequence):
    """The Walecki orderings of a t-grid, created on demand (there are ~t^d/2)."""

    def __init__(self, t: int, d: int):
        if t < 1:
            raise ValueError("grid side must be positive")
        self.t, self.d = t, d
        n = t ** d
        self.padded = n + (n % 2)

    def __len__(self):
        return max(1, self.padded // 2)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        if i < 0:
            i += len(self)
        if not 0 <= i < len(self):
            raise IndexError(i)
        return WaleckiOrdering(self.t, self.d, i)

    def candidates(self, a: int, b: int) -> list[int]:
        return [all_pairs_witness(a, b, self.t, self.d)] if a != b else []

    def keys_all(self, cells) -> np.ndarray:
        """keys_all(cells)[j] == self[j].keys(cells), for every path j at once."""
        cells = np.asarray(cells, dtype=np.int64)
        n = self.t ** self.d
        j = np.arange(len(self), dtype=np.int64)[:, None]
        r = walecki_rank(cells[None, :], j, self.padded)
        if self.padded != n:
            dummy = walecki_rank(np.int64(n), j, self.padded)
            r = r - (r > dummy)
        return r


def all_pairs_orderings(t: int, d: int) -> AllPairsSet:
    """Orderings in which every pair of cells is adjacent at least once."""
    return AllPairsSet(t, d)


def all_pairs_witness(a: int, b: int, t: int, d: int) -> int:
    n = t ** d
    return walecki_path_for_pair(a, b, n + (n % 2))


# --------------------------------------------------------------------- directional


class DirectionalOrdering(TableOrdering):
    """Cells stabbed by the lines of one separated group, line by line, then the rest.

    ``blocks[cell]`` is the line that claimed the cell (in emission order) or UNTOUCHED.
    """

    def __init__(self, t, d, table, blocks, direction: int, group: int):
        super().__init__(t, d, table)
        self.blocks = blocks
        self.direction = direction
        self.group = group


def _orthonormal_complement(v: np.ndarray) -> np.ndarray:
    """Rows spanning the hyperplane orthogonal to unit vector ``v``."""
    d = len(v)
    _, _, vt = np.linalg.svd(v[None, :])
    return vt[1:d]


def _greedy_1d(xs: np.ndarray, r: float) -> list[int]:
    kept_sorted: list[float] = []
    kept = []
    for i, x in enumerate(xs.tolist()):
        k = bisect.bisect_left(kept_sorted, x)
        if k < len(kept_sorted) and kept_sorted[k] - x <= r:
            continue
        if k > 0 and x - kept_sorted[k - 1] <= r:
            continue
        kept_sorted.insert(k, x)
        kept.append(i)
    return kept


def _greedy_low_dim(pts: np.ndarray, r: float) -> list[int]:
    if pts.shape[1] == 1:
        return _greedy_1d(pts[:, 0], r)
    return _greedy_indices(pts, r)


def _partition_low_dim(pts: np.ndarray, R: float) -> list[np.ndarray]:
    remaining = np.arange(len(pts))
    groups = []
    while len(remaining):
        kept = np.asarray(_greedy_low_dim(pts[remaining], R), dtype=np.int64)
        groups.append(remaining[kept])
        mask = np.ones(len(remaining), dtype=bool)
        mask[kept] = False
        remaining = remaining[mask]
    return groups


def lattice_directions(t: int, d: int) -> np.ndarray:
    """Unit vectors of all primitive cell-center differences, in lexicographic order."""
    rng = np.arange(-(t - 1), t)
    grids = np.stack(np.meshgrid(*([rng] * d), indexing="ij"), axis=-1).reshape(-1, d)
    grids = grids[np.any(grids != 0, axis=1)]
    g = np.gcd.reduce(np.abs(grids), axis=1)
    prim = grids[g == 1]
    return prim / np.linalg.norm(prim, axis=1)[:, None]


def directional_net(t: int, d: int, tau: float, net: str = "auto") -> np.ndarray:
    """Directions used by :func:`directional_orderings` (rows are unit vectors)."""
    R = math.sqrt(d)
    res = min((tau / 2) / R, 0.25)
    if d == 1:
        return np.array([[-1.0], [1.0]])
    if net == "auto":
        n_lattice = len(lattice_directions(t, d))
        net = "lattice" if n_lattice <= (1.0 / res) ** (d - 1) else "sphere"
    if net == "sphere":
        return direction_net(R, tau / 2, d).as_array()
    if net == "lattice":
        lat = lattice_directions(t, d)
        return lat[np.asarray(_greedy_indices(lat, res), dtype=np.int64)]
    raise ValueError(f"unknown direction net {net!r}")


@dataclass
class DirectionalSet:
    """All directional orderings of a t-grid plus the bookkeeping for witness lookup."""

    t: int
    d: int
    tau: float
    directions: np.ndarray
    orderings: list[DirectionalOrdering]
    # claim[k, cell] = index (into orderings) of the ordering whose line took ``cell``
    # for direction k, and claim_line the line id inside that ordering; -1 if untouched
    claim: np.ndarray = field(repr=False)
    claim_line: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.orderings)

    def __getitem__(self, i):
        return self.orderings[i]

    def __iter__(self):
        return iter(self.orderings)

    def candidates(self, a: int, b: int, limit: int = 8) -> list[int]:
        """Orderings in which cells a and b sit on a common line, best direction first."""
        ca, cb = cell_center(a, self.t, self.d), cell_center(b, self.t, self.d)
        u = cb - ca
        u = u / np.linalg.norm(u)
        order = np.argsort(-(self.directions @ u), kind="stable")
        out = []
        for k in order[:limit]:
            ia, ib = self.claim[k, a], self.claim[k, b]
            if ia >= 0 and ia == ib and self.claim_line[k, a] == self.claim_line[k, b]:
                out.append(int(ia))
        return out


def directional_orderings(t: int, d: int, tau_divisor: float | None = None,
                          net: str = "auto") -> DirectionalSet:
    """O(t^{d-1}) orderings; any two cells have one where everything strictly between
    them stabs their center segment and the between-cells are no farther apart than
    the two centers. Grid cell side is 1/t (the unit cube)."""
    if t < 1:
        raise ValueError("grid side must be positive")
    n = t ** d
    delta = 1.0 / t
    tau = delta / (tau_divisor if tau_divisor is not None else 8 * d)
    psi = 2 * math.sqrt(d) * delta
    centers = all_centers(t, d)
    if n == 1:
        o = DirectionalOrdering(t, d, np.zeros(1, dtype=np.int64),
                                np.zeros(1, dtype=np.int64), 0, 0)
        return DirectionalSet(t, d, tau, np.ones((1, d)) / math.sqrt(d), [o],
                              np.zeros((1, 1), dtype=np.int64), np.zeros((1, 1), dtype=np.int64))
    dirs = directional_net(t, d, tau, net)
    orderings: list[DirectionalOrdering] = []
    claim = np.full((len(dirs), n), -1, dtype=np.int64)
    claim_line = np.full((len(dirs), n), -1, dtype=np.int64)
    tau2 = tau * tau
    for k, v in enumerate(dirs):
        along = centers @ v
        if d == 1:
            coords = np.zeros((n, 1))
        else:
            coords = centers @ _orthonormal_complement(v).T
        net_idx = np.asarray(_greedy_low_dim(coords, tau / 2), dtype=np.int64)
        for g, members in enumerate(_partition_low_dim(coords[net_idx], psi)):
            blocks = np.full(n, UNTOUCHED, dtype=np.int64)
            seq = []
            for line, p in enumerate(net_idx[members]):
                diff = coords - coords[p]
                hit = np.flatnonzero(np.einsum("ij,ij->i", diff, diff) <= tau2)
                if np.any(blocks[hit] != UNTOUCHED):
                    raise RuntimeError("a cell was stabbed by two lines of one separated group")
                hit = hit[np.lexsort((hit, along[hit]))]
                blocks[hit] = line
                seq.append(hit)
                claim[k, hit] = len(orderings)
                claim_line[k, hit] = line
            rest = np.flatnonzero(blocks == UNTOUCHED)
            seq.append(rest)
            order = np.concatenate(seq)
            table = np.empty(n, dtype=np.int64)
            table[order] = np.arange(n)
            orderings.append(DirectionalOrdering(t, d, table, blocks, k, g))
    return DirectionalSet(t, d, tau, dirs, orderings, claim, claim_line)


# ----------------------------------------------------------------------------- gap


def gap_beta(t: int, alpha: int, d: int, beta_divisor: float | None = None) -> int:
    """Largest power of two strictly below ceil(alpha / (8d)); 1 when none exists."""
    c = math.ceil(alpha / (beta_divisor if beta_divisor is not None else 8 * d))
    beta = 1
    while beta * 2 < c and beta * 2 <= t:
        beta *= 2
    return beta


class ComposedOrdering(GridOrdering):
    """Two-level ordering: coarse blocks from ``top``, fine order from ``bottom``.

    With coarse side 1 (beta == 1) this is just ``top``. Otherwise cells are grouped by
    the bottom ordering's line, then by the top rank of their coarse parent, then by
    bottom rank, so a pair sharing a line only has line-cells of their two coarse
    blocks between them.
    """

    def __init__(self, t: int, d: int, beta: int, top: GridOrdering,
                 bottom: DirectionalOrdering | None, literal_key: bool = False):
        self.t, self.d, self.beta = t, d, beta
        self.top, self.bottom = top, bottom
        self.literal_key = literal_key

    def parents(self, cells) -> np.ndarray:
        coords = delinearize(cells, self.t, self.d) // self.beta
        return linearize(coords, self.t // self.beta)

    def keys(self, cells) -> np.ndarray:
        cells = np.asarray(cells, dtype=np.int64)
        if self.bottom is None:
            return self.top.keys(cells if self.beta == 1 else self.parents(cells))
        n = self.n_cells
        top = self.top.keys(self.parents(cells))
        fine = self.bottom.table[cells]
        if self.literal_key:
            return top * n + fine
        block = np.minimum(self.bottom.blocks[cells], n)
        n_top = self.top.n_cells
        return (block * n_top + top) * n + fine


@dataclass
class GapOrderingSet:
    t: int
    alpha: int
    d: int
    beta: int
    top: list[GridOrdering]
    bottom: DirectionalSet | None
    literal_key: bool = False

    def __len__(self):
        return len(self.top) * (len(self.bottom) if self.bottom is not None else 1)

    def __getitem__(self, i: int) -> ComposedOrdering:
        if not 0 <= i < len(self):
            raise IndexError(i)
        if self.bottom is None:
            return ComposedOrdering(self.t, self.d, 1, self.top[i], None)
        nb = len(self.bottom)
        return ComposedOrdering(self.t, self.d, self.beta, self.top[i // nb],
                                self.bottom[i % nb], self.literal_key)

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def keys_all(self, cells):
        if self.bottom is None and hasattr(self.top, "keys_all"):
            return self.top.keys_all(cells)
        return np.stack([self[i].keys(cells) for i in range(len(self))])

    def provenance(self, i: int) -> tuple[int, int | None, int]:
        """(top ordering id, bottom ordering id, beta) of member ``i``."""
        if self.bottom is None:
            return i, None, self.beta
        nb = len(self.bottom)
        return i // nb, i % nb, self.beta

    def parent(self, cell: int) -> int:
        c = delinearize(cell, self.t, self.d) // self.beta
        return linearize(c, self.t // self.beta)

    def candidates(self, a: int, b: int) -> list[int]:
        """Members likely to witness the pair (a, b); the caller still verifies them."""
        pa, pb = self.parent(a), self.parent(b)
        tt = self.t // self.beta
        j = all_pairs_witness(pa, pb, tt, self.d) if pa != pb else 0
        if self.bottom is None:
            return [j]
        first_is_a = self.top[j].keys([pa])[0] <= self.top[j].keys([pb])[0]
        src, dst = (a, b) if first_is_a else (b, a)
        nb = len(self.bottom)
        return [j * nb + k for k in self.bottom.candidates(src, dst)]


def gap_orderings(t: int, alpha: int, d: int, beta_divisor: float | None = None,
                  tau_divisor: float | None = None, literal_key: bool = False) -> GapOrderingSet:
    """Orderings where every far-apart pair (cell gap >= alpha cells) has a witness
    whose between-cells stab the pair's center segment and hug one of its ends."""
    if t < 1 or t & (t - 1):
        raise ValueError("gap orderings need t to be a power of two")
    if not 1 <= alpha <= t:
        raise ValueError("alpha must lie in [1, t]")
    beta = gap_beta(t, alpha, d, beta_divisor)
    top = all_pairs_orderings(t // beta, d)
    if beta == 1:
        # every bottom ordering composes to the same order as its top ordering
        return GapOrderingSet(t, alpha, d, 1, top, None)
    if t ** d > DIRECTIONAL_CELL_CAP:
        raise ValueError(f"directional bottom orderings over {t}^{d} cells exceed the "
                         f"{DIRECTIONAL_CELL_CAP}-cell build cap")
    bottom = directional_orderings(t, d, tau_divisor)
    return GapOrderingSet(t, alpha, d, beta, top, bottom, literal_key)


def is_permutation(table: Sequence[int]) -> bool:
    table = np.asarray(table)
    return bool(np.array_equal(np.sort(table), np.arange(len(table))))
