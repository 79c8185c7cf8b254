import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lsorder.grid_orders import (UNTOUCHED, CellIndex, TableOrdering, all_pairs_orderings,
                                 all_pairs_witness, cell_center, delinearize,
                                 directional_orderings, gap_beta, gap_orderings,
                                 is_permutation, linearize, walecki_orderings, walecki_rank)


def test_cell_center_examples():
    assert cell_center(0, 2, 1).tolist() == [0.25]
    assert cell_center((1, 1), 2).tolist() == [0.75, 0.75]
    assert cell_center(CellIndex((2, 0), 4), 4).tolist() == [0.625, 0.125]
    with pytest.raises(ValueError):
        CellIndex((4, 0), 4)


@given(st.integers(1, 6), st.integers(1, 3), st.data())
def test_linearize_roundtrip(t, d, data):
    idx = data.draw(st.integers(0, t ** d - 1))
    assert linearize(delinearize(idx, t, d), t) == idx
    assert CellIndex.from_linear(idx, t, d).linearized == idx


def test_walecki_small():
    assert walecki_orderings(2) == [(0, 1)]
    assert walecki_orderings(4) == [(0, 1, 3, 2), (1, 2, 0, 3)]
    with pytest.raises(ValueError):
        walecki_orderings(5)


@pytest.mark.parametrize("n", [2, 4, 6, 16, 30])
def test_walecki_paths_cover_all_pairs_once(n):
    paths = walecki_orderings(n)
    seen = {}
    for j, path in enumerate(paths):
        assert sorted(path) == list(range(n))
        assert [walecki_rank(v, j, n) for v in path] == list(range(n))
        for a, b in zip(path, path[1:]):
            seen.setdefault(frozenset((a, b)), []).append(j)
    assert len(seen) == n * (n - 1) // 2
    assert all(len(v) == 1 for v in seen.values())


def adjacent_pairs(orders):
    out = set()
    for o in orders:
        seq = o.sequence.tolist()
        out.update(frozenset(p) for p in zip(seq, seq[1:]))
    return out


@pytest.mark.parametrize("t,d,count", [(1, 2, 1), (2, 1, 1), (3, 2, 5), (4, 2, 8)])
def test_all_pairs_counts_and_coverage(t, d, count):
    orders = all_pairs_orderings(t, d)
    assert len(orders) == count
    assert all(is_permutation(o.table) for o in orders)
    n = t ** d
    assert len(adjacent_pairs(orders)) == n * (n - 1) // 2
    for a, b in itertools.combinations(range(n), 2):
        j = all_pairs_witness(a, b, t, d)
        assert abs(orders[j].rank(a) - orders[j].rank(b)) == 1


def test_keys_all_matches_members():
    orders = all_pairs_orderings(3, 2)
    cells = np.arange(9)
    assert np.array_equal(orders.keys_all(cells), np.stack([o.keys(cells) for o in orders]))


def test_table_ordering_validates():
    with pytest.raises(ValueError):
        TableOrdering(2, 2, [0, 1, 2])
    o = TableOrdering(2, 1, [1, 0])
    assert o.sequence.tolist() == [1, 0]


def test_directional_trivial_grid():
    ds = directional_orderings(1, 2)
    assert len(ds) == 1 and ds[0].table.tolist() == [0]


@pytest.mark.parametrize("t,d", [(4, 2), (8, 2), (2, 3)])
def test_directional_structure(t, d):
    ds = directional_orderings(t, d)
    for o in ds:
        assert is_permutation(o.table)
        # claimed cells come first, line by line; untouched cells ascend at the end
        blocks = o.blocks[o.sequence]
        claimed = blocks[blocks != UNTOUCHED]
        assert np.all(np.diff(claimed) >= 0)
        rest = o.sequence[blocks == UNTOUCHED]
        assert np.all(np.diff(rest) > 0)
        assert np.all(blocks[: len(claimed)] != UNTOUCHED)


def test_directional_candidates_share_a_line():
    ds = directional_orderings(8, 2)
    for a, b in [(0, 63), (5, 40), (9, 10)]:
        cands = ds.candidates(a, b)
        assert cands
        o = ds[cands[0]]
        assert o.blocks[a] == o.blocks[b] != UNTOUCHED


def test_gap_beta_rule():
    assert gap_beta(2, 1, 2) == 1
    assert gap_beta(16, 16, 1) == 1
    assert gap_beta(64, 64, 1) == 4
    assert gap_beta(16, 8, 2, beta_divisor=1) == 4


def test_gap_orderings_collapse_when_beta_is_one():
    g = gap_orderings(16, 16, 1)
    assert g.beta == 1 and g.bottom is None
    assert len(g) == len(all_pairs_orderings(16, 1))


def test_gap_orderings_validate():
    with pytest.raises(ValueError):
        gap_orderings(6, 2, 2)
    with pytest.raises(ValueError):
        gap_orderings(8, 9, 2)


def test_composed_orderings_are_permutations():
    g = gap_orderings(16, 8, 2, beta_divisor=1)
    assert g.beta == 4
    for i in range(0, len(g), max(1, len(g) // 25)):
        assert is_permutation(g[i].table)
        top, bottom, beta = g.provenance(i)
        assert beta == 4 and bottom is not None
