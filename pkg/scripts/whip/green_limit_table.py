"""
Tabulate (1/n) M^{ij} at i = ⌊nx⌋, j = ⌊ny⌋ against the continuum Green function for θ(s) = sin(πs)
"""

import logging
import sys

from whipchain.utils import configure_logging
from whipchain.whip.continuum import green_table
from whipchain.whip.kink import discrete_green_limit
from whipchain.whip.profiles import ProfileSpec, kappa_on_grid

N_LIST = [50, 100, 200, 400, 800]
REFERENCE_M = 1600


def main():
    if len(sys.argv) <= 2:
        print(f"Usage: {sys.argv[0]} x y")
        sys.exit(1)
    configure_logging(logging.INFO)
    x, y = float(sys.argv[1]), float(sys.argv[2])
    profile = ProfileSpec.sine()
    reference = green_table(kappa_on_grid(profile, REFERENCE_M)).at(x, y)
    print(f"G({x}, {y}) = {reference:.10f} (m={REFERENCE_M})")
    for n, value in zip(N_LIST, discrete_green_limit(profile, x, y, N_LIST)):
        print(f"\tn={n:5d}  (1/n) M = {value:.10f}  error {abs(value - reference):.3e}")


if __name__ == '__main__':
    main()
