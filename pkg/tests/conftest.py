import pytest

from attacklab import kernels
from attacklab.convergence import build_influence_cache
from attacklab.presets import base_scenario


@pytest.fixture(scope="session")
def s2():
    """Six-agent path, planar dynamics, constant attack, unit costs, budget 2."""
    return base_scenario("constant")


@pytest.fixture(scope="session")
def s2_cache(s2):
    return build_influence_cache(s2)


@pytest.fixture(scope="session")
def sine30():
    return base_scenario("sin")


@pytest.fixture(scope="session")
def sine30_cache(sine30):
    return build_influence_cache(sine30)


@pytest.fixture(params=sorted(kernels.available_backends()))
def backend(request):
    return kernels.available_backends()[request.param]
