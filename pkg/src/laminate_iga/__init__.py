"""Stiffness assembly for layered composites on tensor-product B-spline spaces.

Three assemblers produce the same free-free stiffness matrix:
:func:`assemble_standard` (layer-by-layer 3D quadrature), :func:`assemble_fast`
(cached in-plane operators times 1D thickness integrals) and
:func:`assemble_fast_voigt_free` (the same split built from bracket
contractions of the elasticity tensor).
"""

from .assemble_fast import assemble_fast, compute_inplane_operators, compute_thickness_operators
from .assemble_standard import assemble_standard, reference_bilinear
from .bench import BenchConfig, BenchRecord, emit_report, load_records, pagano_setup, run_bench
from .geometry import BilinearQuad, BSplineSurface, ExtrudedGeometry, PlanarRectangle
from .materials import PAGANO, Layup, MaterialConfig, OrthotropicConstants
from .problem import AssemblyStats, ProblemSetup
from .sparse import SparseMatrixBuilder, frobenius_rel_diff, write_matrix_market
from .splines import KnotVector, TensorProductSpace, uniform_knot_vector
from .voigt_free import assemble_fast_voigt_free

__all__ = [
    "AssemblyStats",
    "BSplineSurface",
    "BenchConfig",
    "BenchRecord",
    "BilinearQuad",
    "ExtrudedGeometry",
    "KnotVector",
    "Layup",
    "MaterialConfig",
    "OrthotropicConstants",
    "PAGANO",
    "PlanarRectangle",
    "ProblemSetup",
    "SparseMatrixBuilder",
    "TensorProductSpace",
    "assemble_fast",
    "assemble_fast_voigt_free",
    "assemble_standard",
    "compute_inplane_operators",
    "compute_thickness_operators",
    "emit_report",
    "frobenius_rel_diff",
    "load_records",
    "pagano_setup",
    "reference_bilinear",
    "run_bench",
    "uniform_knot_vector",
    "write_matrix_market",
]
