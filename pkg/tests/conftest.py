"""Shared fixtures: small configurations that keep the suite fast."""

import numpy as np
import pytest

from ialink.config import SimConfig


@pytest.fixture
def small_cfg():
    """Tiny but structurally complete setup: 3 users, 9-symbol window."""
    return SimConfig(m=9, t=4, t_d=0, nu_d=0.01, p=100.0, n_d=6,
                     trials=3, rotations=2, seed=5)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
