"""
Sample random chains and sections and print the largest and smallest sectional curvature per n
"""

import logging
import sys

import numpy as np

from whipchain.chain.curvature import curvature_extremes
from whipchain.constants import DEFAULT_SEED
from whipchain.utils import configure_logging


def main():
    if len(sys.argv) <= 1:
        print(f"Usage: {sys.argv[0]} n1,n2,... [samples] [seed]")
        sys.exit(1)
    configure_logging(logging.INFO)
    n_list = [int(n) for n in sys.argv[1].split(",")]
    samples = int(sys.argv[2]) if len(sys.argv) > 2 else 200
    seed = int(sys.argv[3]) if len(sys.argv) > 3 else DEFAULT_SEED
    print(f"{'n':>6} {'samples':>8} {'min K':>12} {'max K':>12} {'max K / n':>10}")
    for row in curvature_extremes(n_list, samples, np.random.default_rng(seed)):
        print(f"{row.n:6d} {row.samples:8d} {row.min_K:12.6g} {row.max_K:12.6g} {row.max_K / row.n:10.4g}")


if __name__ == '__main__':
    main()
