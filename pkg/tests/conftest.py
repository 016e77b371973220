import numpy as np
import pytest

from hartreebox.profile import build_profile

SIGMAS = (0.3, 0.5, 0.7)


@pytest.fixture(scope="session")
def profiles():
    """One Bessel profile per sigma in the standard sweep."""
    return {s: build_profile(s) for s in SIGMAS}


@pytest.fixture(scope="session")
def profile_half(profiles):
    return profiles[0.5]


@pytest.fixture()
def rng():
    return np.random.default_rng(20260823)
