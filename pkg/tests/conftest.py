import math
import os

import numpy as np
import pytest


@pytest.fixture(autouse=True, scope="session")
def _oracle_cache(tmp_path_factory):
    # keep oracle caches out of the user's home during tests unless set explicitly
    if "SELFNORM_CACHE_DIR" not in os.environ:
        os.environ["SELFNORM_CACHE_DIR"] = str(tmp_path_factory.mktemp("oracle-cache"))
    yield


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def phi_cdf(z):
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def bisect_quantile(u, tol=1e-13):
    """Inverse normal CDF by bisection on the erfc-based CDF (test oracle)."""
    lo, hi = -40.0, 40.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if phi_cdf(mid) < u:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
