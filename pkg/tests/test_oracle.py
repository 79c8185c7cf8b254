import math
import random

import numpy as np
import pytest

from lsorder.geometry import Segment, UnitPoint, dist, dist_point_segment
from lsorder.grid_orders import (TableOrdering, directional_orderings, gap_orderings)
from lsorder.lso import OrderingId, build_gap
from lsorder.oracle import (bridge_length, cell_set_distance, lower_bound_grid_instance,
                            lower_bound_sphere_instance, segment_hits_boxes,
                            spanner_edge_lower_bound_report, verify_gap_orderings,
                            verify_grid_conclusion, verify_locality, verify_locality_gap)

from conftest import uniform_points


class LexFamily:
    """One ordering: lexicographic by coordinates. Deliberately not local."""

    m = 1

    def ordering_id(self, i):
        return OrderingId(0, 0, i)

    def argsort(self, oid, coords):
        coords = np.asarray(coords)
        return np.lexsort(coords.T[::-1])

    def candidates(self, p, q):
        return []


def test_segment_box_intersection():
    lo, hi = np.array([[0.0, 0.0], [2.0, 2.0]]), np.array([[1.0, 1.0], [3.0, 3.0]])
    assert segment_hits_boxes((0.5, -1), (0.5, 2), lo, hi).tolist() == [True, False]
    assert segment_hits_boxes((1.0, 1.0), (2.0, 2.0), lo, hi).tolist() == [True, True]
    assert segment_hits_boxes((1.5, 0), (1.5, 5), lo, hi).tolist() == [False, False]


def test_cell_set_distance():
    assert cell_set_distance(0, 1, 4, 1) == 0.0
    assert cell_set_distance(0, 3, 4, 1) == 0.5
    assert math.isclose(cell_set_distance(0, 15, 4, 2), math.sqrt(2) * 0.5)


def test_tiny_sets_pass():
    fam = LexFamily()
    assert verify_locality(fam, uniform_points(2, 2, 1), 0.1).passed
    assert verify_locality_gap(fam, uniform_points(2, 2, 1), 0.1, 0.1).passed


def test_lexicographic_family_fails_with_reproducible_witness():
    pts = [UnitPoint.from_floats(x) for x in [(0.1, 0.1), (0.2, 0.9), (0.3, 0.1)]]
    rep = verify_locality(LexFamily(), pts, 0.25)
    assert not rep.passed
    v = rep.violation
    assert v.pair == (0, 2) and v.witness == 1 and v.predicate == "ball"
    p, u, q = (pts[k].to_floats() for k in (0, 1, 2))
    assert min(dist(u, p), dist(u, q)) > 0.25 * dist(p, q)
    rep = verify_locality_gap(LexFamily(), pts, 0.25, 0.125)
    assert rep.violation.predicate == "hippodrome"
    assert dist_point_segment(u, Segment(p, q)) > 0.25 * dist(p, q)
    assert rep.to_json()["schema"] == 1


def test_grid_trivial_and_directional():
    assert verify_grid_conclusion(directional_orderings(1, 2), 1, 2).passed
    assert verify_grid_conclusion(directional_orderings(4, 2), 4, 2).passed


def test_shuffled_grid_orderings_fail():
    rng = np.random.default_rng(5)
    shuffled = [TableOrdering(8, 2, rng.permutation(64)) for _ in range(8)]
    rep = verify_grid_conclusion(shuffled, 8, 2)
    assert not rep.passed
    assert rep.violation.predicate in ("segment", "distance")
    # the stored witness cell really sits between the pair in the stored ordering
    a, b = rep.violation.pair
    tab = shuffled[rep.violation.ordering].table
    assert min(tab[a], tab[b]) < tab[rep.violation.witness] < max(tab[a], tab[b])


def test_grid_cap():
    with pytest.raises(ValueError):
        verify_grid_conclusion([], 128, 2)


def test_gap_orderings_far_corners_only():
    rep = verify_gap_orderings(gap_orderings(16, 16, 2))
    assert rep.passed and 0 < rep.pairs_checked < 16 ** 2 * (16 ** 2 - 1) // 2


def test_gap_orderings_vacuous():
    rep = verify_gap_orderings(gap_orderings(16, 16, 1))
    assert rep.passed and rep.pairs_checked == 0


@pytest.mark.parametrize("alpha,beta", [(32, 2), (48, 4)])
def test_gap_orderings_with_coarse_blocks(alpha, beta):
    gset = gap_orderings(64, alpha, 1)
    assert gset.beta == beta
    assert verify_gap_orderings(gset).passed


def test_oversized_blocks_are_caught():
    # blocks wider than the alpha/4 reach break the construction; the oracle notices
    assert not verify_gap_orderings(gap_orderings(16, 8, 2, beta_divisor=1)).passed


def test_gap_orderings_negative_control():
    class Identity:
        t, d, alpha = 8, 2, 2

        def __len__(self):
            return 1

        def __getitem__(self, i):
            return TableOrdering(8, 2, np.arange(64))

        def candidates(self, a, b):
            return []

    rep = verify_gap_orderings(Identity())
    assert not rep.passed and rep.violation.predicate in ("segment", "proximity")


def test_collinear_points_gap_family():
    fam = build_gap(0.25, 0.125, 1)
    pts = [UnitPoint.from_floats([(k + 0.5) / 50]) for k in range(50)]
    assert verify_locality_gap(fam, pts, 0.25, 0.125).passed


def test_bridge_is_long():
    fam = build_gap(0.25, 0.125, 2)
    pts = uniform_points(60, 2, 21)
    rng = random.Random(0)
    for _ in range(40):
        i, j = rng.sample(range(60), 2)
        assert bridge_length(fam, pts, i, j, 0.25, 0.125) >= 0.75 - 1e-9


def test_grid_lower_bound_examples():
    r1 = lower_bound_grid_instance(0.25, 1)
    assert r1.premise_holds and r1.implied_bound == 2
    assert (r1.points.ravel() * 5).round().tolist() == [1, 2, 3, 4]
    r2 = lower_bound_grid_instance(1 / 8, 2)
    assert r2.premise_holds and len(r2.points) == 16 and r2.implied_bound == 8
    with pytest.raises(ValueError):
        lower_bound_grid_instance(0.9, 1)


def test_grid_lower_bound_premise_brute_force():
    rep = lower_bound_grid_instance(1 / 8, 2)
    P = rep.points * (rep.detail["m"] + 1)
    n = len(P)
    for i in range(n):
        for j in range(i + 1, n):
            r = dist(P[i], P[j]) / 8
            for k in range(n):
                if k not in (i, j):
                    assert min(dist(P[k], P[i]), dist(P[k], P[j])) > r


def test_sphere_lower_bound_examples():
    r1 = lower_bound_sphere_instance(0.1, 1)
    assert r1.premise_holds and r1.implied_bound == 1
    a = lower_bound_sphere_instance(1 / 16, 2)
    b = lower_bound_sphere_instance(1 / 32, 2)
    assert a.premise_holds and b.premise_holds
    assert 8 <= a.detail["packing_size"] <= 32
    assert 1.5 <= b.detail["packing_size"] / a.detail["packing_size"] <= 3
    with pytest.raises(ValueError):
        lower_bound_sphere_instance(0.25, 2)


def test_spanner_report_floors():
    assert spanner_edge_lower_bound_report([1 / 4], 2)[0]["floor"] == 4
    assert spanner_edge_lower_bound_report([1 / 8], 2)[0]["floor"] == 8
    row = spanner_edge_lower_bound_report([1 / 16], 3, n=10)[0]
    assert row["floor"] == 256 and row["m"] > row["floor"] and row["edge_floor"] == 2560
