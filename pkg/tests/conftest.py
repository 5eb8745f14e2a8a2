import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from isowill.surfaces import TorusSpec, gen_ellipsoid, gen_torus  # noqa: E402


@pytest.fixture(scope="session")
def torus_04():
    return gen_torus(TorusSpec(1.0, 0.4, 128, 128))


@pytest.fixture(scope="session")
def torus_06():
    return gen_torus(TorusSpec(1.0, 0.6, 128, 128))


@pytest.fixture(scope="session")
def torus_pair(torus_04, torus_06):
    """torus(c=0.4) at its outer equator, torus(c=0.6) at its inner equator."""
    return torus_04, 0, torus_06, 64


@pytest.fixture(scope="session")
def ellipsoid_112():
    return gen_ellipsoid(1.0, 1.0, 2.0, subdiv=5)


@pytest.fixture(scope="session")
def sweep_torus(torus_pair):
    from isowill.glue import sweep_alpha

    return sweep_alpha(*torus_pair, alphas=(0.08, 0.04, 0.02, 0.01), gamma=0.1)


@pytest.fixture(scope="session")
def harness_torus(torus_pair):
    from isowill.glue import theorem_harness

    return theorem_harness(*torus_pair)
