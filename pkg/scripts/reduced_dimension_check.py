"""Spanner stretch and BCP accuracy in one dimension, where the families fit in memory.

At d=2 the families these experiments need run to millions of orderings; in 1d they have
a few thousand, so the same experiments can run end to end.

    python scripts/reduced_dimension_check.py [--n 200] [--ops 1000]
"""
import argparse
import random
import time

from lsorder.geometry import UnitPoint
from lsorder.locality_graph import (BcpState, Color, LocalityGraph, PointRecord, bcp_family,
                                    bcp_query, brute_force_bcp, spanner_edges, spanner_family,
                                    stretch_check)


def spanner_run(eps, n, seed):
    fam = spanner_family(eps, 1)
    rng = random.Random(seed)
    graph = LocalityGraph(fam)
    pts = [UnitPoint.from_floats([rng.random()]) for _ in range(n)]
    start = time.perf_counter()
    for i, p in enumerate(pts):
        graph.insert(PointRecord(i, p))
    rep = stretch_check(spanner_edges(graph), {i: p.to_floats() for i, p in enumerate(pts)})
    return fam.m, graph.edge_count(), rep.max_stretch, time.perf_counter() - start


def bcp_run(eps, ops, seed):
    fam = bcp_family(eps, 1)
    rng = random.Random(seed)
    state = BcpState(LocalityGraph(fam))
    live, nxt, worst, bad = [], 0, 1.0, 0
    for k in range(ops):
        if (k < ops * 0.3 or rng.random() < 0.5 or not live) and len(live) < 300:
            c = Color.RED if nxt % 2 == 0 else Color.BLUE
            state.insert(PointRecord(nxt, UnitPoint.from_floats([rng.random()]), c))
            live.append(nxt)
            nxt += 1
        else:
            state.delete(live.pop(rng.randrange(len(live))))
        got, want = bcp_query(state), brute_force_bcp(state.graph.records.values())
        if (got is None) != (want is None):
            bad += 1
        elif got and want > 0:
            worst = max(worst, got[2] / want)
            bad += got[2] > (1 + eps) * want
    return fam.m, worst, bad


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--ops", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    print("spanner (d=1): eps, m, edges, max_stretch, bound, seconds")
    for eps in (0.5, 0.25):
        m, edges, s, sec = spanner_run(eps, args.n, args.seed)
        print(f"  {eps}, {m}, {edges}, {s:.6f}, {1 + eps}, {sec:.1f}")
    print("bcp (d=1): eps, m, worst_ratio, failures")
    m, worst, bad = bcp_run(0.25, args.ops, args.seed)
    print(f"  0.25, {m}, {worst:.6f}, {bad}")


if __name__ == "__main__":
    main()
