"""Extruded-surface parametrizations ``F(xi) = S(xi1, xi2) + xi3 * a``.

The Jacobian of such a map depends on the in-plane coordinates only, so a
frame computed at an in-plane quadrature point is valid for every point
through the thickness. There is deliberately no way to build a general 3D
map here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .splines import KnotVector, basis_funs_ders

DET_TOL = 1e-14


class DegenerateGeometryError(ValueError):
    pass


class SurfaceMap:
    """A 2D -> 3D map with first partial derivatives (vectorized over points)."""

    def evaluate(self, u, v) -> np.ndarray:
        raise NotImplementedError

    def derivatives(self, u, v) -> tuple[np.ndarray, np.ndarray]:
        """``(dS/du, dS/dv)``, each of shape ``(N, 3)``."""
        raise NotImplementedError


@dataclass(frozen=True)
class PlanarRectangle(SurfaceMap):
    Lx: float = 1.0
    Ly: float = 1.0
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def evaluate(self, u, v):
        u, v = np.broadcast_arrays(np.atleast_1d(u), np.atleast_1d(v))
        out = np.zeros(u.shape + (3,))
        out[..., 0] = self.Lx * u
        out[..., 1] = self.Ly * v
        return out + np.asarray(self.origin)

    def derivatives(self, u, v):
        u, v = np.broadcast_arrays(np.atleast_1d(u), np.atleast_1d(v))
        du = np.zeros(u.shape + (3,))
        dv = np.zeros(u.shape + (3,))
        du[..., 0] = self.Lx
        dv[..., 1] = self.Ly
        return du, dv


@dataclass(frozen=True)
class BilinearQuad(SurfaceMap):
    """Bilinear patch through corners ``S(0,0), S(1,0), S(0,1), S(1,1)``."""

    corners: tuple

    def _c(self):
        c = np.asarray(self.corners, dtype=float)
        if c.shape != (4, 3):
            raise ValueError("corners must be a (4, 3) array")
        return c

    def evaluate(self, u, v):
        c = self._c()
        u, v = np.broadcast_arrays(np.atleast_1d(u), np.atleast_1d(v))
        u, v = u[..., None], v[..., None]
        return (1 - u) * (1 - v) * c[0] + u * (1 - v) * c[1] + (1 - u) * v * c[2] + u * v * c[3]

    def derivatives(self, u, v):
        c = self._c()
        u, v = np.broadcast_arrays(np.atleast_1d(u), np.atleast_1d(v))
        u, v = u[..., None], v[..., None]
        du = (1 - v) * (c[1] - c[0]) + v * (c[3] - c[2])
        dv = (1 - u) * (c[2] - c[0]) + u * (c[3] - c[1])
        return du, dv


class BSplineSurface(SurfaceMap):
    """Non-rational tensor-product B-spline surface.

    Args:
        ku, kv: knot vectors in the two in-plane directions.
        control_points: array of shape ``(ku.n, kv.n, 3)``.
    """

    def __init__(self, ku: KnotVector, kv: KnotVector, control_points):
        cp = np.asarray(control_points, dtype=float)
        if cp.shape != (ku.n, kv.n, 3):
            raise ValueError(f"control points must have shape {(ku.n, kv.n, 3)}")
        self.ku, self.kv, self.control_points = ku, kv, cp

    def _eval(self, u, v):
        u, v = np.broadcast_arrays(np.atleast_1d(u).astype(float), np.atleast_1d(v).astype(float))
        shape = u.shape
        fu, nu, du = basis_funs_ders(self.ku, u.ravel())
        fv, nv, dv = basis_funs_ders(self.kv, v.ravel())
        iu = fu[:, None] + np.arange(self.ku.p + 1)
        iv = fv[:, None] + np.arange(self.kv.p + 1)
        # (N, pu+1, pv+1, 3)
        cp = self.control_points[iu[:, :, None], iv[:, None, :]]
        S = np.einsum("na,nb,nabk->nk", nu, nv, cp)
        Su = np.einsum("na,nb,nabk->nk", du, nv, cp)
        Sv = np.einsum("na,nb,nabk->nk", nu, dv, cp)
        return S.reshape(shape + (3,)), Su.reshape(shape + (3,)), Sv.reshape(shape + (3,))

    def evaluate(self, u, v):
        return self._eval(u, v)[0]

    def derivatives(self, u, v):
        _, Su, Sv = self._eval(u, v)
        return Su, Sv


@dataclass(frozen=True)
class GeometryFrame:
    """Jacobian data at one in-plane point.

    ``jacobian`` has columns ``[dS/du | dS/dv | a]``. The covariant vectors
    ``g_i`` are its columns; the contravariant vectors ``g^i`` are the rows of
    its inverse, so that ``g^i . g_j = delta_ij``.
    """

    jacobian: np.ndarray
    det: float
    inv_transpose: np.ndarray

    @property
    def covariant(self) -> np.ndarray:
        """Rows are ``g_1, g_2, g_3``."""
        return self.jacobian.T

    @property
    def contravariant(self) -> np.ndarray:
        """Rows are ``g^1, g^2, g^3``."""
        return self.inv_transpose.T


@dataclass(frozen=True)
class ExtrudedGeometry:
    surface: SurfaceMap
    direction: tuple[float, float, float] = (0.0, 0.0, 1.0)

    def evaluate(self, xi1, xi2, xi3):
        a = np.asarray(self.direction, dtype=float)
        return self.surface.evaluate(xi1, xi2) + np.asarray(xi3, dtype=float)[..., None] * a

    def jacobians(self, u, v):
        """Batched frames at in-plane points.

        Returns:
            ``(DF, det, DF^{-T})`` with shapes ``(N, 3, 3)``, ``(N,)``, ``(N, 3, 3)``.
        """
        Su, Sv = self.surface.derivatives(u, v)
        Su = Su.reshape(-1, 3)
        Sv = Sv.reshape(-1, 3)
        DF = np.empty((Su.shape[0], 3, 3))
        DF[:, :, 0] = Su
        DF[:, :, 1] = Sv
        DF[:, :, 2] = np.asarray(self.direction, dtype=float)
        det = np.linalg.det(DF)
        if np.any(np.abs(det) < DET_TOL):
            raise DegenerateGeometryError("Jacobian determinant vanishes")
        inv_t = np.linalg.inv(DF).transpose(0, 2, 1)
        return DF, det, inv_t

    def jacobian(self, xi1, xi2, xi3=0.0) -> np.ndarray:
        """Jacobian at a 3D parametric point; ``xi3`` has no influence."""
        return self.jacobians([xi1], [xi2])[0][0]


def frame_at(geom: ExtrudedGeometry, xi_bar) -> GeometryFrame:
    u, v = xi_bar
    if not (0.0 <= u <= 1.0 and 0.0 <= v <= 1.0):
        raise ValueError("in-plane point outside [0, 1]^2")
    DF, det, inv_t = geom.jacobians([u], [v])
    return GeometryFrame(DF[0], float(det[0]), inv_t[0])


def pullback_gradient(frame: GeometryFrame, grad_hat) -> np.ndarray:
    """Physical gradient ``DF^{-T} grad_hat``."""
    return frame.inv_transpose @ np.asarray(grad_hat, dtype=float)
