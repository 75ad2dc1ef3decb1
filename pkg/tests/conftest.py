import sys
from pathlib import Path

import numpy as np
import pytest

# Make the package importable when the repository root is the current directory
sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from whipchain.chain.classes import ChainState
from whipchain.constants import DEFAULT_SEED


@pytest.fixture
def rng():
    return np.random.default_rng(DEFAULT_SEED)


@pytest.fixture
def hanging_chain():
    """ Straight chain hanging straight down at rest """
    return ChainState.straight(10, -np.pi / 2, g=9.8)


@pytest.fixture
def rotating_chain():
    """ Straight chain spinning rigidly at unit rate without gravity """
    return ChainState.straight(10, 0.3, omega=1.0)
