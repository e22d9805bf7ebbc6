import numpy as np
import pytest

from laminate_iga.geometry import (
    BilinearQuad,
    BSplineSurface,
    DegenerateGeometryError,
    ExtrudedGeometry,
    PlanarRectangle,
    frame_at,
    pullback_gradient,
)
from laminate_iga.splines import uniform_knot_vector


@pytest.fixture
def bspline_surface():
    ku, kv = uniform_knot_vector(2, 2), uniform_knot_vector(3, 1)
    rng = np.random.default_rng(7)
    gx, gy = np.meshgrid(np.linspace(0, 2, ku.n), np.linspace(0, 1, kv.n), indexing="ij")
    cp = np.stack([gx, gy, np.zeros_like(gx)], axis=-1) + 0.05 * rng.standard_normal((ku.n, kv.n, 3))
    return BSplineSurface(ku, kv, cp)


SURFACES = {
    "rectangle": PlanarRectangle(3.0, 0.5),
    "bilinear": BilinearQuad([(0, 0, 0), (2, 0.3, 0.1), (0.2, 1.2, -0.1), (2.5, 1.6, 0.4)]),
}


class TestFrame:
    def test_identity(self):
        f = frame_at(ExtrudedGeometry(PlanarRectangle()), (0.3, 0.8))
        np.testing.assert_allclose(f.jacobian, np.eye(3))
        assert f.det == 1.0
        np.testing.assert_allclose(f.covariant, np.eye(3))
        np.testing.assert_allclose(f.contravariant, np.eye(3))

    def test_plate(self):
        f = frame_at(ExtrudedGeometry(PlanarRectangle(4, 2), (0, 0, 0.1)), (0.5, 0.5))
        np.testing.assert_allclose(f.jacobian, np.diag([4, 2, 0.1]))
        assert f.det == pytest.approx(0.8, rel=1e-15)

    def test_sheared_extrusion(self):
        f = frame_at(ExtrudedGeometry(PlanarRectangle(), (0.2, 0, 1)), (0.1, 0.9))
        np.testing.assert_allclose(f.inv_transpose, np.linalg.inv(f.jacobian.T), atol=1e-15)
        np.testing.assert_allclose(f.contravariant[2], [0, 0, 1], atol=1e-15)
        np.testing.assert_allclose(f.contravariant[0], [1, 0, -0.2], atol=1e-15)

    def test_degenerate(self):
        with pytest.raises(DegenerateGeometryError):
            frame_at(ExtrudedGeometry(PlanarRectangle(), (1.0, 0, 0)), (0.5, 0.5))

    @pytest.mark.parametrize("name", SURFACES)
    def test_dual_bases(self, name):
        geom = ExtrudedGeometry(SURFACES[name], (0.1, 0.2, 0.7))
        for pt in [(0, 0), (0.3, 0.6), (1, 1)]:
            f = frame_at(geom, pt)
            np.testing.assert_allclose(f.contravariant @ f.covariant.T, np.eye(3), atol=1e-12)
            Su, Sv, a = f.covariant
            assert f.det == pytest.approx(np.cross(Su, Sv) @ a, abs=1e-12)

    def test_independent_of_thickness(self, bspline_surface):
        geom = ExtrudedGeometry(bspline_surface, (0, 0.1, 1))
        ref = geom.jacobian(0.4, 0.7, 0.0)
        for z in (0.37, 1.0):
            assert np.array_equal(geom.jacobian(0.4, 0.7, z), ref)

    def test_extrusion_map(self):
        geom = ExtrudedGeometry(PlanarRectangle(2, 3), (0, 0, 0.5))
        np.testing.assert_allclose(geom.evaluate(0.5, 0.5, 1.0)[0], [1.0, 1.5, 0.5])


class TestSurfaceDerivatives:
    @pytest.mark.parametrize("name", list(SURFACES) + ["bspline"])
    def test_finite_differences(self, name, bspline_surface):
        surf = bspline_surface if name == "bspline" else SURFACES[name]
        h = 1e-7
        for u, v in [(0.21, 0.33), (0.7, 0.55)]:
            Su, Sv = surf.derivatives(u, v)
            fd_u = (surf.evaluate(u + h, v) - surf.evaluate(u - h, v)) / (2 * h)
            fd_v = (surf.evaluate(u, v + h) - surf.evaluate(u, v - h)) / (2 * h)
            np.testing.assert_allclose(Su, fd_u, atol=1e-6)
            np.testing.assert_allclose(Sv, fd_v, atol=1e-6)

    def test_bspline_shape_check(self):
        with pytest.raises(ValueError):
            BSplineSurface(uniform_knot_vector(1, 1), uniform_knot_vector(1, 1), np.zeros((3, 2, 3)))


class TestPullback:
    def test_identity(self):
        f = frame_at(ExtrudedGeometry(PlanarRectangle()), (0.5, 0.5))
        np.testing.assert_allclose(pullback_gradient(f, [1, 2, 3]), [1, 2, 3])

    def test_scaling(self):
        f = frame_at(ExtrudedGeometry(PlanarRectangle(4, 2), (0, 0, 0.1)), (0.5, 0.5))
        np.testing.assert_allclose(pullback_gradient(f, [1, 0, 0]), [0.25, 0, 0])

    def test_linear_solve_oracle(self, rng):
        corners = rng.uniform(-1, 1, (4, 3)) + np.array([[0, 0, 0], [2, 0, 0], [0, 2, 0], [2, 2, 0]])
        geom = ExtrudedGeometry(BilinearQuad(corners), (0.3, -0.2, 1.5))
        f = frame_at(geom, (0.4, 0.6))
        g = rng.standard_normal(3)
        np.testing.assert_allclose(pullback_gradient(f, g), np.linalg.solve(f.jacobian.T, g), rtol=1e-12)
