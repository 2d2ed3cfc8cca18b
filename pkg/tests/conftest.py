import pytest

import vdflux as vf


@pytest.fixture(scope="session")
def grid32():
    return vf.TorusGrid(2, 32)


@pytest.fixture(scope="session")
def grid64():
    return vf.TorusGrid(2, 64)


@pytest.fixture(scope="session", params=["smooth", "sharp"])
def cutoff(request):
    return vf.make_cutoff(request.param)


@pytest.fixture(scope="session")
def smooth():
    return vf.make_cutoff("smooth")


@pytest.fixture(scope="session")
def sharp():
    return vf.make_cutoff("sharp")


def seeded_state(grid, seed, contrast=0.4, sigma=0.3, amplitude=0.8, with_pressure=False):
    """Deterministic random state: positive density, divergence-free velocity."""
    rho = vf.density_profile(grid, contrast, seed=seed)
    u = vf.random_besov(grid, 1.0 / 3.0, 3.0, sigma, seed=seed + 1000,
                        divergence_free=True, amplitude=amplitude)
    p = None
    if with_pressure:
        p = vf.random_besov(grid, 1.0 / 3.0, 1.5, 0.5, seed=seed + 2000)
    return vf.SolutionState(rho=rho, u=u, p=p)


@pytest.fixture(scope="session")
def random_state(grid32):
    return seeded_state(grid32, seed=7, with_pressure=True)
