import numpy as np
import pytest

from laminate_iga.bench import pagano_setup
from laminate_iga.materials import PAGANO, Layup, MaterialConfig, OrthotropicConstants

# criterion number -> (description, passed, detail), filled by test_acceptance
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        name, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {name} ({detail})")


@pytest.fixture
def acceptance():
    def record(n, name, ok, detail=""):
        ACCEPTANCE[n] = (name, bool(ok), detail)
        print(f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {name} ({detail})")
        return ok

    return record


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def pagano():
    return PAGANO


@pytest.fixture
def isotropic_unit():
    return OrthotropicConstants.isotropic(1.0, 0.0)


@pytest.fixture
def cross_ply_setup():
    return pagano_setup(4, "cross_ply", p=2, elements=2)


@pytest.fixture
def skew_setup():
    """Non-orthogonal extrusion over a bilinear quad, random angles."""
    from laminate_iga.geometry import BilinearQuad, ExtrudedGeometry
    from laminate_iga.problem import ProblemSetup
    from laminate_iga.splines import TensorProductSpace, uniform_knot_vector

    surf = BilinearQuad([(0.0, 0.0, 0.0), (2.0, 0.2, 0.1), (0.3, 1.5, 0.0), (2.4, 1.8, 0.3)])
    geom = ExtrudedGeometry(surf, (0.1, -0.05, 0.3))
    configs = [MaterialConfig(PAGANO, a) for a in (0.3, -1.1, 0.3, 2.0)]
    layup = Layup([0.0, 0.1, 0.45, 0.6, 1.0], configs)
    space = TensorProductSpace(uniform_knot_vector(2, 2), uniform_knot_vector(2, 3), uniform_knot_vector(2, 2))
    return ProblemSetup(space, geom, layup)
