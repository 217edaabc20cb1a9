import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gcvx.manifolds import SPD, Euclidean, Hyperbolic, SphericalCap, gaussian_point

settings.register_profile(
    "gcvx", deadline=None, derandomize=True, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("gcvx")


def rng_for(seed):
    return np.random.Generator(np.random.Philox(seed))


def sample(M, rng, radius, center=None):
    center = M.origin() if center is None else center
    return gaussian_point(M, center, radius / np.sqrt(M.dim), radius, rng)


MANIFOLDS = {
    "euclidean": lambda: Euclidean(3),
    "hyperbolic": lambda: Hyperbolic(3),
    "spd": lambda: SPD(3),
    "cap": lambda: SphericalCap(3, 1.2),
}


@pytest.fixture(params=list(MANIFOLDS))
def manifold(request):
    return MANIFOLDS[request.param]()


@pytest.fixture
def rng():
    return rng_for(0)
