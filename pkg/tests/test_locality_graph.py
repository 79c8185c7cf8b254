import random
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lsorder.geometry import UnitPoint
from lsorder.lso import Constants, build_gap
from lsorder.locality_graph import (BcpState, Color, FamilyTooLarge, LocalityGraph, PointRecord,
                                    bcp_family, bcp_query, brute_force_bcp, floyd_warshall_stretch,
                                    from_scratch_edges, spanner_edges, spanner_family,
                                    stretch_check)

from conftest import uniform_points

FAM1 = build_gap(0.25, 0.125, 1)
SMALL2 = build_gap(0.5, 0.5, 2, constants=Constants(gap_divisor=1))


def rec(i, xs, color=Color.NONE):
    return PointRecord(i, UnitPoint.from_floats(xs), color)


def test_empty_then_one_then_two():
    g = LocalityGraph(FAM1)
    d = g.insert(rec(0, [0.3]))
    assert not d.added and g.edge_count() == 0
    d = g.insert(rec(1, [0.7]))
    assert d.added == {(0, 1)} and g.edges[(0, 1)] == FAM1.m
    assert g.max_degree() == 1


def test_duplicate_and_unknown_ids():
    g = LocalityGraph(FAM1)
    g.insert(rec(0, [0.3]))
    with pytest.raises(KeyError):
        g.insert(rec(0, [0.4]))
    with pytest.raises(KeyError):
        g.delete(9)


def test_delete_middle_reconnects():
    g = LocalityGraph(FAM1)
    for i, x in enumerate([0.1, 0.5, 0.9]):
        g.insert(rec(i, [x]))
    g.delete(1)
    assert set(g.edges) == {(0, 2)} and g.edges[(0, 2)] == FAM1.m


def test_insert_delete_inverse():
    g = LocalityGraph(SMALL2)
    pts = uniform_points(30, 2, 3)
    for i, p in enumerate(pts):
        g.insert(PointRecord(i, p))
    before = Counter(g.edges)
    delta_in = g.insert(rec(99, [0.42, 0.58]))
    delta_out = g.delete(99)
    assert g.edges == before
    assert delta_in.added == delta_out.removed and delta_in.removed == delta_out.added


def test_incremental_matches_from_scratch():
    g = LocalityGraph(FAM1)
    pts = uniform_points(200, 1, 11)
    for i, p in enumerate(pts):
        g.insert(PointRecord(i, p))
    assert g.edges == from_scratch_edges(FAM1, g.records.values())
    assert sum(g.edges.values()) == FAM1.m * (len(pts) - 1)


def test_interleaved_stream_matches_from_scratch():
    rng = random.Random(7)
    g = LocalityGraph(SMALL2)
    live, nxt = [], 0
    for step in range(500):
        if live and rng.random() < 0.4:
            g.delete(live.pop(rng.randrange(len(live))))
        else:
            g.insert(rec(nxt, [rng.random(), rng.random()]))
            live.append(nxt)
            nxt += 1
        if step % 100 == 99:
            assert g.edges == from_scratch_edges(SMALL2, g.records.values())
            assert g.max_degree() <= 2 * SMALL2.m


@settings(max_examples=25)
@given(st.lists(st.floats(0, 1, exclude_max=True), min_size=0, max_size=25, unique=True))
def test_edges_are_consecutive_pairs(xs):
    g = LocalityGraph(FAM1)
    for i, x in enumerate(xs):
        g.insert(rec(i, [x]))
    assert g.edges == from_scratch_edges(FAM1, g.records.values())
    assert g.edge_count() <= FAM1.m * max(len(xs) - 1, 0)


def test_bcp_single_pair_and_monochrome():
    st_ = BcpState(LocalityGraph(FAM1))
    st_.insert(rec(0, [0.2], Color.RED))
    assert bcp_query(st_) is None
    st_.insert(rec(1, [0.6], Color.RED))
    assert bcp_query(st_) is None
    st_.insert(rec(2, [0.9], Color.BLUE))
    r, b, w = bcp_query(st_)
    assert (r, b) == (1, 2) and w == pytest.approx(0.3)
    st_.delete(2)
    assert bcp_query(st_) is None and not st_.heap


@pytest.mark.parametrize("family", [FAM1, SMALL2], ids=["d1", "d2-small"])
def test_bcp_stream_against_brute_force(family):
    rng = random.Random(3)
    d = family.params.d
    st_ = BcpState(LocalityGraph(family))
    live, nxt = [], 0
    for _ in range(300):
        if live and rng.random() < 0.35:
            st_.delete(live.pop(rng.randrange(len(live))))
        else:
            c = rng.choice([Color.RED, Color.BLUE, Color.NONE])
            st_.insert(rec(nxt, [rng.random() for _ in range(d)], c))
            live.append(nxt)
            nxt += 1
        got = bcp_query(st_)
        want = brute_force_bcp(st_.graph.records.values())
        if family is FAM1:
            # the gap family at eps/4 is exact enough to find the true pair in 1d
            assert (got is None) == (want is None)
            if got:
                assert got[2] == pytest.approx(want)
        # heap holds exactly the live bichromatic edges
        live_bi = {e for e in st_.graph.edges if st_._bichromatic(e)}
        assert set(st_._len) == live_bi and len(st_.heap) == len(live_bi)


def test_stretch_complete_and_path():
    pts = {i: [x] for i, x in enumerate([0.1, 0.4, 0.8])}
    complete = [(0, 1, 0.3), (0, 2, 0.7), (1, 2, 0.4)]
    assert stretch_check(complete, pts).max_stretch == pytest.approx(1.0)
    path = {i: [i / 10, 0.0] for i in range(6)}
    edges = [(i, i + 1, 0.1) for i in range(5)]
    assert stretch_check(edges, path).max_stretch == pytest.approx(1.0)
    assert stretch_check([], {0: [0.5]}).max_stretch == 1.0
    assert stretch_check([], {}).pair is None


def test_stretch_matches_floyd_warshall():
    rng = np.random.default_rng(4)
    P = rng.random((25, 2))
    pts = {i: P[i] for i in range(25)}
    edges = [(i, j, float(np.linalg.norm(P[i] - P[j])))
             for i in range(25) for j in range(i + 1, 25) if rng.random() < 0.25]
    fw = floyd_warshall_stretch(edges, pts)
    sc = stretch_check(edges, pts).max_stretch
    assert sc == pytest.approx(fw) or (np.isinf(sc) and np.isinf(fw))


def test_spanner_on_small_family_is_connected():
    g = LocalityGraph(FAM1)
    pts = uniform_points(60, 1, 8)
    for i, p in enumerate(pts):
        g.insert(PointRecord(i, p))
    rep = stretch_check(spanner_edges(g), {i: p.to_floats() for i, p in enumerate(pts)})
    assert rep.max_stretch < float("inf")


def test_large_families_refuse():
    with pytest.raises(FamilyTooLarge) as e:
        bcp_family(0.25, 2)
    assert e.value.m > e.value.cap
    with pytest.raises(FamilyTooLarge):
        spanner_family(0.25, 2)
    assert bcp_family(1.0, 1).m <= 20_000
