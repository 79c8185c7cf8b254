"""Tabulate ordering counts for the classic and gap families.

    python scripts/family_sizes.py [--gamma 0.125] [--dims 1,2,3]

Counts for beta > 1 families need the grid orderings built; those rows are skipped
unless --build is given.
"""
import argparse
import csv
import math
import sys

from lsorder.lso import LsoParams, m_lower_bound, predicted_m


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--gamma", type=float, default=0.125)
    ap.add_argument("--dims", default="1,2,3")
    ap.add_argument("--build", action="store_true")
    args = ap.parse_args()
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["d", "eps", "kind", "lam", "grid_side", "alpha", "m", "m_lower_bound",
                "m_over_side^d_log"])
    for d in map(int, args.dims.split(",")):
        for k in range(2, 7):
            eps = 2.0 ** -k
            for kind in ("classic", "gap"):
                p = (LsoParams.classic(eps, d) if kind == "classic"
                     else LsoParams.gap(eps, args.gamma, d))
                m = predicted_m(p, build=args.build)
                norm = "" if m is None else f"{m / (p.big_e ** d * math.log2(p.big_e)):.3f}"
                w.writerow([d, eps, kind, p.lam, p.big_e, p.alpha if kind == "gap" else "",
                            "" if m is None else m, m_lower_bound(p), norm])


if __name__ == "__main__":
    main()
