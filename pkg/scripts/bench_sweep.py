"""Build and insert timings across eps for one dimension, written as CSV.

    python scripts/bench_sweep.py --dim 1 --eps-list 0.5,0.25,0.125 --n 200
"""
import sys

from lsorder.cli import main

if __name__ == "__main__":
    argv = ["bench", "--format", "csv", "--timing", *sys.argv[1:]]
    sys.exit(main(argv))
