import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pensynth import PanelData


@pytest.fixture
def rng():
    return np.random.default_rng(20230815)


@pytest.fixture
def small_panel(rng):
    """3 treated, 4 donors, 6 pre periods of generic random data."""
    y = rng.normal(size=(7, 7)) + 10.0
    return PanelData(outcomes=y, n_treated=3, n_pre=6)


@pytest.fixture
def twin_panel():
    """Treated unit 0 is an exact copy of donor 0 in every period."""
    donor0 = np.array([1.0, 2.0, 3.0, 4.0, 2.5])
    donor1 = np.array([5.0, 1.0, 7.0, 0.0, 3.0])
    treated = donor0.copy()
    y = np.vstack([treated, donor0, donor1])
    return PanelData(outcomes=y, n_treated=1, n_pre=4)
