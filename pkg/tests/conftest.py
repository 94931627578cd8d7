import numpy as np
import pytest

from ecbc import Dataset, fit_conditional_copula, select_degrees
from ecbc.simbench import sample_clayton


def clayton_dataset(n, seed, lo=0.0, hi=3.0):
    """Clayton-linked dataset with covariate-varying parameter exp(0.8x - 2)."""
    rng = np.random.default_rng(seed)
    x = lo + (hi - lo) * rng.random(n)
    u1, u2 = sample_clayton(np.exp(0.8 * x - 2.0), rng)
    return Dataset(y1=u1, y2=u2, x=x)


@pytest.fixture(scope="session")
def dataset_factory():
    return clayton_dataset


@pytest.fixture(scope="session")
def fit_factory():
    def make(n, seed, degrees=None, lo=0.0, hi=3.0):
        ds = clayton_dataset(n, seed, lo, hi)
        if degrees is None:
            degrees = select_degrees(n, policy="plugin")
        return fit_conditional_copula(ds, degrees)

    return make


@pytest.fixture(scope="session")
def small_fit(fit_factory):
    """One shared n=50 fit for cheap smoke checks."""
    return fit_factory(50, seed=1234)
