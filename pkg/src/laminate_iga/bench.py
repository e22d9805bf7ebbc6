"""Benchmark grid over degree, in-plane elements and layer count.

Each grid cell builds a layered plate problem, assembles it with every
requested backend (one warm-up run, then the median of ``repetitions``
timed runs), and cross-checks the matrices against the standard backend.
"""

from __future__ import annotations

import csv
import itertools
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .assemble_fast import assemble_fast
from .assemble_standard import assemble_standard
from .geometry import ExtrudedGeometry, PlanarRectangle
from .materials import PAGANO, Layup, MaterialConfig, OrthotropicConstants
from .problem import AssemblyStats, ProblemSetup
from .sparse import frobenius_rel_diff
from .splines import TensorProductSpace, uniform_knot_vector
from .voigt_free import assemble_fast_voigt_free

log = logging.getLogger(__name__)

BACKENDS = ("standard", "fast", "voigt_free")
CSV_COLUMNS = ("backend", "p", "elements", "m", "m_bar", "time_s", "nnz", "rel_diff", "qpoints")

# repeating angle patterns (degrees), bottom layer first
FAMILY_ANGLES = {
    "cross_ply": (0.0, 90.0),
    "quad_ply": (0.0, 45.0, -45.0, 90.0),
}
_FAMILY_ALIASES = {
    "cross_ply_0_90": "cross_ply",
    "quad_ply_0_p45_m45_90": "quad_ply",
}
FAMILIES = ("cross_ply", "quad_ply", "random", "custom")


class ConfigError(ValueError):
    pass


def normalize_family(name: str) -> str:
    name = _FAMILY_ALIASES.get(name, name)
    if name not in FAMILIES:
        raise ConfigError(f"unknown layup family {name!r}; expected one of {FAMILIES}")
    return name


def normalize_backend(name: str) -> str:
    name = name.replace("-", "_")
    if name not in BACKENDS:
        raise ConfigError(f"unknown backend {name!r}; expected one of {BACKENDS}")
    return name


@dataclass
class PlateGeometry:
    """Axis-aligned ``Lx x Ly`` plate extruded along ``a``."""

    Lx: float = 1.0
    Ly: float = 1.0
    a: tuple = (0.0, 0.0, 0.1)

    def build(self) -> ExtrudedGeometry:
        return ExtrudedGeometry(PlanarRectangle(self.Lx, self.Ly), tuple(float(x) for x in self.a))


def family_angles(family: str, m: int, *, angles=None, seed: int = 0) -> list[float]:
    """Ply angles in degrees for ``m`` layers.

    ``cross_ply`` and ``quad_ply`` cycle their pattern, ``random`` draws
    uniform angles in [-90, 90) from ``seed`` and ``custom`` returns
    ``angles`` (which must have ``m`` entries).
    """
    family = normalize_family(family)
    if m < 1:
        raise ConfigError("layer count must be >= 1")
    if family == "custom":
        if angles is None or len(angles) != m:
            raise ConfigError("custom layup needs one angle per layer")
        return [float(a) for a in angles]
    if family == "random":
        rng = np.random.default_rng(seed)
        return list(rng.uniform(-90.0, 90.0, size=m))
    pattern = FAMILY_ANGLES[family]
    return [pattern[i % len(pattern)] for i in range(m)]


def pagano_setup(
    m: int,
    family: str = "cross_ply",
    p: int = 1,
    elements=1,
    *,
    thickness_elements: int = 1,
    geometry: Optional[PlateGeometry] = None,
    material: OrthotropicConstants = PAGANO,
    angles=None,
    interfaces=None,
    seed: int = 0,
) -> ProblemSetup:
    """Layered plate with ``m`` plies of one orthotropic material.

    Args:
        m: number of layers.
        family: layup family (see :func:`family_angles`).
        p: spline degree in all three directions.
        elements: in-plane elements per direction, an int or ``(nx, ny)``.
        thickness_elements: knot spans through the thickness.
        geometry: plate dimensions, default ``1 x 1 x 0.1``.
        material: engineering constants, the Pagano set by default.
        angles: ply angles in degrees for the ``custom`` family.
        interfaces: layer interfaces, equal thicknesses when omitted.
        seed: RNG seed for the ``random`` family.
    """
    nx, ny = (elements, elements) if np.isscalar(elements) else elements
    degs = family_angles(family, m, angles=angles, seed=seed)
    configs = [MaterialConfig(material, math.radians(a)) for a in degs]
    layup = Layup.equal_layers(configs) if interfaces is None else Layup(interfaces, configs)
    space = TensorProductSpace(
        uniform_knot_vector(p, int(nx)),
        uniform_knot_vector(p, int(ny)),
        uniform_knot_vector(p, int(thickness_elements)),
    )
    geom = (geometry or PlateGeometry()).build()
    return ProblemSetup(space, geom, layup)


@dataclass
class BenchConfig:
    """Benchmark grid; every combination of the three lists is one cell."""

    degrees: list
    inplane_elements: list
    layer_counts: list
    layup_family: str = "cross_ply"
    geometry: PlateGeometry = field(default_factory=PlateGeometry)
    repetitions: int = 1
    backends: tuple = ("standard", "fast")
    material: OrthotropicConstants = PAGANO
    angles: Optional[list] = None
    interfaces: Optional[list] = None
    thickness_elements: int = 1
    decompose_angles: bool = False

    def __post_init__(self):
        self.degrees = [int(p) for p in _as_list(self.degrees)]
        self.inplane_elements = [_as_pair(e) for e in _as_list(self.inplane_elements)]
        self.layer_counts = [int(m) for m in _as_list(self.layer_counts)]
        self.layup_family = normalize_family(self.layup_family)
        self.backends = tuple(normalize_backend(b) for b in _as_list(self.backends))
        if not (self.degrees and self.inplane_elements and self.layer_counts and self.backends):
            raise ConfigError("degrees, elements, layer counts and backends must be nonempty")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if min(self.degrees) < 1:
            raise ConfigError("degree must be >= 1")
        if min(min(e) for e in self.inplane_elements) < 1 or self.thickness_elements < 1:
            raise ConfigError("element counts must be >= 1")
        if min(self.layer_counts) < 1:
            raise ConfigError("layer count must be >= 1")
        if self.layup_family == "custom":
            if self.angles is None:
                raise ConfigError("custom layup needs 'angles'")
            self.layer_counts = [len(self.angles)]

    def cells(self):
        """Grid cells ``(p, (nx, ny), m)`` in sorted order."""
        return sorted(itertools.product(self.degrees, self.inplane_elements, self.layer_counts))

    def setup(self, p: int, elements, m: int, seed: int = 0) -> ProblemSetup:
        return pagano_setup(
            m,
            self.layup_family,
            p,
            elements,
            thickness_elements=self.thickness_elements,
            geometry=self.geometry,
            material=self.material,
            angles=self.angles,
            interfaces=self.interfaces,
            seed=seed,
        )

    @classmethod
    def from_dict(cls, d: dict) -> "BenchConfig":
        """Parse the JSON configuration layout.

        ``material`` holds the nine engineering constants (Pagano if absent);
        ``layup`` has either ``family`` with ``layers`` (int or list) or
        ``angles`` in degrees, plus optional ``interfaces``;
        ``discretization`` has ``degree`` (int or list), ``elements`` (``[nx, ny]``
        or a list of them) and ``thickness_elements``; ``geometry`` has
        ``Lx``, ``Ly`` and ``a``. Optional ``repetitions``, ``backends`` and
        ``decompose_angles`` sit at the top level.
        """
        try:
            material = OrthotropicConstants.from_dict(d["material"]) if "material" in d else PAGANO
            layup = d.get("layup", {})
            disc = d["discretization"]
            geo = d.get("geometry", {})
            angles = layup.get("angles")
            family = "custom" if angles is not None else layup.get("family", "cross_ply")
            layers = layup.get("layers", len(angles) if angles is not None else None)
            if layers is None:
                raise ConfigError("layup needs 'layers' or 'angles'")
            elements = disc.get("elements", [1, 1])
            if np.isscalar(elements) or np.isscalar(elements[0]):
                elements = [elements]
            return cls(
                degrees=disc["degree"],
                inplane_elements=elements,
                layer_counts=layers,
                layup_family=family,
                geometry=PlateGeometry(
                    float(geo.get("Lx", 1.0)), float(geo.get("Ly", 1.0)), tuple(geo.get("a", (0.0, 0.0, 0.1)))
                ),
                repetitions=int(d.get("repetitions", 1)),
                backends=d.get("backends", ("standard", "fast")),
                material=material,
                angles=angles,
                interfaces=layup.get("interfaces"),
                thickness_elements=int(disc.get("thickness_elements", 1)),
                decompose_angles=bool(d.get("decompose_angles", False)),
            )
        except KeyError as exc:
            raise ConfigError(f"missing configuration key {exc}") from None
        except TypeError as exc:
            raise ConfigError(f"malformed configuration: {exc}") from None

    @classmethod
    def from_json(cls, path) -> "BenchConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _as_list(x) -> list:
    if isinstance(x, (str, bytes)) or np.isscalar(x):
        return [x]
    return list(x)


def _as_pair(e) -> tuple[int, int]:
    if np.isscalar(e):
        return (int(e), int(e))
    nx, ny = e
    return (int(nx), int(ny))


@dataclass
class BenchRecord:
    """One (backend, grid cell) result.

    ``qpoints`` is the instrumented number of in-plane quadrature-point
    visits per in-plane element; ``rel_diff`` is the relative Frobenius
    difference to the standard matrix (NaN when standard was not run).
    """

    backend: str
    p: int
    elements: tuple
    m: int
    m_bar: int
    time_s: float
    nnz: int
    rel_diff: float
    qpoints: int
    error: Optional[str] = None

    def sort_key(self):
        return (self.backend, self.p, tuple(self.elements), self.m)

    def as_row(self) -> dict:
        row = {k: getattr(self, k) for k in CSV_COLUMNS}
        row["elements"] = format_elements(self.elements)
        return row

    def __eq__(self, other):
        if not isinstance(other, BenchRecord):
            return NotImplemented
        a, b = asdict(self), asdict(other)
        a["elements"], b["elements"] = tuple(self.elements), tuple(other.elements)
        return all(_same(a[k], b[k]) for k in a)


def _same(x, y) -> bool:
    if isinstance(x, float) and isinstance(y, float) and math.isnan(x) and math.isnan(y):
        return True
    return x == y


def format_elements(e) -> str:
    return f"{int(e[0])}x{int(e[1])}"


def parse_elements(s) -> tuple[int, int]:
    if isinstance(s, (list, tuple)):
        return _as_pair(s)
    nx, _, ny = str(s).partition("x")
    return (int(nx), int(ny or nx))


def backend_function(backend: str, *, decompose_angles: bool = False) -> Callable:
    backend = normalize_backend(backend)
    if backend == "standard":
        return assemble_standard
    if backend == "fast":
        return lambda setup, **kw: assemble_fast(setup, decompose_angles=decompose_angles, **kw)
    return assemble_fast_voigt_free


def time_assembly(fn: Callable, setup: ProblemSetup, repetitions: int, threads: int = 1):
    """Warm-up run (instrumented) followed by ``repetitions`` timed runs.

    Returns:
        ``(matrix, median seconds, stats)``.
    """
    stats = AssemblyStats()
    K = fn(setup, stats=stats, threads=threads)
    times = []
    for _ in range(repetitions):
        t0 = time.perf_counter()
        K = fn(setup, threads=threads)
        times.append(time.perf_counter() - t0)
    return K, float(np.median(times)), stats


def run_bench(config: BenchConfig, threads: int = 1, seed: int = 0) -> list[BenchRecord]:
    """Run every grid cell sequentially; a failing cell is recorded and skipped."""
    records = []
    # standard first so the others can be compared against it
    backends = sorted(config.backends, key=BACKENDS.index)
    for p, elements, m in config.cells():
        try:
            setup = config.setup(p, elements, m, seed=seed)
        except Exception as exc:  # recorded, the run continues
            log.warning("cell p=%d elements=%s m=%d failed: %s", p, elements, m, exc)
            for b in backends:
                records.append(_failed(b, p, elements, m, exc))
            continue
        reference = None
        for backend in backends:
            fn = backend_function(backend, decompose_angles=config.decompose_angles)
            try:
                K, t, stats = time_assembly(fn, setup, config.repetitions, threads)
            except Exception as exc:
                log.warning("%s failed on p=%d elements=%s m=%d: %s", backend, p, elements, m, exc)
                records.append(_failed(backend, p, elements, m, exc, setup.layup.m_bar))
                continue
            if backend == "standard":
                reference = K
            rel = frobenius_rel_diff(reference, K) if reference is not None else float("nan")
            records.append(
                BenchRecord(
                    backend=backend,
                    p=p,
                    elements=tuple(elements),
                    m=m,
                    m_bar=setup.layup.m_bar,
                    time_s=t,
                    nnz=int(K.nnz),
                    rel_diff=float(rel),
                    qpoints=int(round(stats.qpoints_per_element)),
                )
            )
    return sorted(records, key=BenchRecord.sort_key)


def _failed(backend, p, elements, m, exc, m_bar=0) -> BenchRecord:
    nan = float("nan")
    return BenchRecord(backend, p, tuple(elements), m, m_bar, nan, 0, nan, 0, error=f"{type(exc).__name__}: {exc}")


def emit_report(records: Sequence[BenchRecord], path, fmt: str = "csv", metadata: Optional[dict] = None) -> None:
    """Write records sorted by (backend, p, elements, m).

    CSV holds exactly the columns of :data:`CSV_COLUMNS`; JSON additionally
    keeps failure messages and ``metadata`` (e.g. the thread count).
    """
    if not records:
        raise ValueError("no records to report")
    records = sorted(records, key=BenchRecord.sort_key)
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
            writer.writeheader()
            for r in records:
                writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.as_row().items()})
    elif fmt == "json":
        payload = {"metadata": metadata or {}, "records": [asdict(r) for r in records]}
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2)
    else:
        raise ValueError(f"unknown report format {fmt!r}")


def load_records(path, fmt: Optional[str] = None) -> list[BenchRecord]:
    """Read back a report written by :func:`emit_report`."""
    fmt = fmt or ("json" if str(path).endswith(".json") else "csv")
    if fmt == "json":
        with open(path) as fh:
            rows = json.load(fh)["records"]
        return [BenchRecord(**{**r, "elements": tuple(r["elements"])}) for r in rows]
    with open(path, newline="") as fh:
        return [
            BenchRecord(
                backend=row["backend"],
                p=int(row["p"]),
                elements=parse_elements(row["elements"]),
                m=int(row["m"]),
                m_bar=int(row["m_bar"]),
                time_s=float(row["time_s"]),
                nnz=int(row["nnz"]),
                rel_diff=float(row["rel_diff"]),
                qpoints=int(row["qpoints"]),
            )
            for row in csv.DictReader(fh)
        ]
