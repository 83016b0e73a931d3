import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from su2lab import fields


@pytest.fixture(scope="session")
def hedgehog_field():
    return fields.hedgehog(fields.smoothed_tail_profile(1.0))


@pytest.fixture(scope="session")
def smoothed_profile():
    return fields.smoothed_tail_profile(1.0)


@pytest.fixture(scope="session")
def tail_profile():
    return fields.pure_tail_profile(1.0)


@pytest.fixture()
def rng():
    return np.random.default_rng(20260808)
