"""
Print the tensions of a chain hanging at rest next to the closed form λ_k = n g (n + 1 - k)
"""

import logging
import math
import sys

import numpy as np

from whipchain.chain.classes import ChainState
from whipchain.chain.dynamics import acceleration
from whipchain.chain.tension import tension
from whipchain.utils import configure_logging


def print_hanging_chain_summary(n: int, g: float):
    state = ChainState.straight(n, -math.pi / 2, g=g)
    lam = tension(state).lam
    expected = n * g * (n + 1 - np.arange(1, n + 1))
    for k in range(n):
        print(f"\t{k + 1:5d}  λ={lam[k]:.12g}  closed form={expected[k]:.12g}")
    print(f"Max relative tension error: {np.max(np.abs(lam - expected) / expected):.3e}")
    print(f"Max |θ''|: {np.max(np.abs(acceleration(state))):.3e}")


def main():
    if len(sys.argv) <= 1:
        print(f"Usage: {sys.argv[0]} n [g]")
        sys.exit(1)
    configure_logging(logging.INFO)
    n = int(sys.argv[1])
    g = float(sys.argv[2]) if len(sys.argv) > 2 else 9.8
    print(f"Hanging chain n={n}, g={g}")
    print_hanging_chain_summary(n, g)


if __name__ == '__main__':
    main()
