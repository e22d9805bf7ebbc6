"""Orthotropic elasticity, in-plane rotation and layered stacks.

Voigt ordering used throughout is ``(11, 22, 33, 12, 13, 23)``, which is
not the more common ``(11, 22, 33, 23, 13, 12)``. The Voigt strain carries
engineering shears (``gamma_ij = 2 eps_ij``) and ``D[a, b] = C_{ij kl}``
for the index pairs of ``a`` and ``b``, so ``eps : C : eps = e^T D e``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .splines import DomainError

VOIGT_PAIRS = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))

_VOIGT_INDEX = np.empty((3, 3), dtype=int)
for _a, (_i, _j) in enumerate(VOIGT_PAIRS):
    _VOIGT_INDEX[_i, _j] = _VOIGT_INDEX[_j, _i] = _a


class InvalidMaterialError(ValueError):
    pass


@dataclass(frozen=True)
class OrthotropicConstants:
    E1: float
    E2: float
    E3: float
    G12: float
    G13: float
    G23: float
    nu12: float
    nu13: float
    nu23: float

    @classmethod
    def isotropic(cls, E: float, nu: float) -> "OrthotropicConstants":
        G = E / (2.0 * (1.0 + nu))
        return cls(E, E, E, G, G, G, nu, nu, nu)

    @classmethod
    def from_dict(cls, d: dict) -> "OrthotropicConstants":
        return cls(**{k: float(d[k]) for k in cls.__dataclass_fields__})


PAGANO = OrthotropicConstants(
    E1=25.0, E2=1.0, E3=1.0, G12=0.2, G13=0.2, G23=0.5, nu12=0.25, nu13=0.25, nu23=0.25
)


def compliance_from_constants(c: OrthotropicConstants) -> np.ndarray:
    S = np.zeros((6, 6))
    S[0, 0] = 1.0 / c.E1
    S[1, 1] = 1.0 / c.E2
    S[2, 2] = 1.0 / c.E3
    S[0, 1] = S[1, 0] = -c.nu12 / c.E1
    S[0, 2] = S[2, 0] = -c.nu13 / c.E1
    S[1, 2] = S[2, 1] = -c.nu23 / c.E2
    S[3, 3] = 1.0 / c.G12
    S[4, 4] = 1.0 / c.G13
    S[5, 5] = 1.0 / c.G23
    return S


def voigt_from_constants(c: OrthotropicConstants) -> np.ndarray:
    """6x6 stiffness in material axes."""
    moduli = (c.E1, c.E2, c.E3, c.G12, c.G13, c.G23)
    if min(moduli) <= 0.0:
        raise InvalidMaterialError("moduli must be positive")
    S = compliance_from_constants(c)
    try:
        np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        raise InvalidMaterialError("compliance is not positive definite") from None
    D = np.linalg.inv(S)
    return 0.5 * (D + D.T)


def constants_from_voigt(D: np.ndarray) -> OrthotropicConstants:
    """Engineering constants of an orthotropic stiffness given in material axes."""
    S = np.linalg.inv(D)
    E1, E2, E3 = 1.0 / S[0, 0], 1.0 / S[1, 1], 1.0 / S[2, 2]
    return OrthotropicConstants(
        E1, E2, E3,
        1.0 / S[3, 3], 1.0 / S[4, 4], 1.0 / S[5, 5],
        -S[0, 1] * E1, -S[0, 2] * E1, -S[1, 2] * E2,
    )


def tensor_from_voigt(D: np.ndarray) -> np.ndarray:
    """Dense 3x3x3x3 elasticity tensor."""
    idx = _VOIGT_INDEX
    return np.asarray(D)[idx[:, :, None, None], idx[None, None, :, :]]


def voigt_from_tensor(C: np.ndarray) -> np.ndarray:
    D = np.empty((6, 6))
    for a, (i, j) in enumerate(VOIGT_PAIRS):
        for b, (k, l) in enumerate(VOIGT_PAIRS):
            D[a, b] = C[i, j, k, l]
    return D


def strain_to_voigt(eps: np.ndarray) -> np.ndarray:
    eps = np.asarray(eps)
    return np.array([eps[0, 0], eps[1, 1], eps[2, 2], 2 * eps[0, 1], 2 * eps[0, 2], 2 * eps[1, 2]])


def rotation_z(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotate_tensor(C: np.ndarray, R: np.ndarray) -> np.ndarray:
    return np.einsum("ia,jb,kc,ld,abcd->ijkl", R, R, R, R, C, optimize=True)


def rotate_inplane(D: np.ndarray, theta: float) -> np.ndarray:
    """Rotate a Voigt stiffness by ``theta`` about the thickness axis e3."""
    if theta == 0.0:
        return np.array(D, dtype=float)
    return voigt_from_tensor(rotate_tensor(tensor_from_voigt(D), rotation_z(theta)))


def angle_weights(theta) -> np.ndarray:
    """Trigonometric weights ``(1, c^4, c^3 s, c^2, c s)`` of the five-matrix split."""
    c, s = np.cos(theta), np.sin(theta)
    return np.stack(np.broadcast_arrays(np.ones_like(c), c**4, c**3 * s, c**2, c * s), axis=-1)


_SAMPLE_ANGLES = np.array([0.0, 0.3, 0.7, 1.1, 2.0])


def angle_decomposition(c: OrthotropicConstants) -> np.ndarray:
    """Angle-independent ``A_1..A_5`` (shape ``(5, 6, 6)``) such that
    ``rotate_inplane(D, t) == sum_k angle_weights(t)[k] * A_k``.
    """
    D = voigt_from_constants(c)
    W = angle_weights(_SAMPLE_ANGLES)
    if abs(np.linalg.det(W)) < 1e-8:
        raise RuntimeError("singular angle sampling system")
    samples = np.stack([rotate_inplane(D, t) for t in _SAMPLE_ANGLES])
    A = np.linalg.solve(W, samples.reshape(5, 36)).reshape(5, 6, 6)
    return 0.5 * (A + A.transpose(0, 2, 1))


def reconstruct_from_decomposition(A: np.ndarray, theta: float) -> np.ndarray:
    return np.tensordot(angle_weights(theta), A, axes=1)


@dataclass(frozen=True)
class MaterialConfig:
    """An orthotropic material placed at in-plane angle ``angle`` (radians)."""

    constants: OrthotropicConstants
    angle: float = 0.0

    @property
    def key(self) -> tuple:
        return (self.constants, float(self.angle))

    @cached_property
    def voigt(self) -> np.ndarray:
        return rotate_inplane(voigt_from_constants(self.constants), self.angle)

    @cached_property
    def tensor(self) -> np.ndarray:
        return tensor_from_voigt(self.voigt)


class Layup:
    """Stack of ``m`` layers over the parametric thickness [0, 1].

    Args:
        interfaces: ``m+1`` strictly increasing values from 0 to 1.
        configs: one :class:`MaterialConfig` per layer, bottom to top.
    """

    def __init__(self, interfaces: Sequence[float], configs: Sequence[MaterialConfig]):
        t = np.asarray(interfaces, dtype=float)
        if len(configs) == 0:
            raise ValueError("empty layup")
        if t.ndim != 1 or t.size != len(configs) + 1:
            raise ValueError("need len(configs) + 1 interfaces")
        if t[0] != 0.0 or t[-1] != 1.0 or np.any(np.diff(t) <= 0.0):
            raise ValueError("interfaces must increase strictly from 0 to 1")
        self.interfaces = t
        self.configs = tuple(configs)

        ids: dict[tuple, int] = {}
        self.distinct_configs: list[MaterialConfig] = []
        config_ids = []
        for cfg in self.configs:
            if cfg.key not in ids:
                ids[cfg.key] = len(self.distinct_configs)
                self.distinct_configs.append(cfg)
            config_ids.append(ids[cfg.key])
        # config_ids[l] indexes distinct_configs; ids follow first appearance
        self.config_ids = np.array(config_ids)

    @classmethod
    def equal_layers(cls, configs: Sequence[MaterialConfig]) -> "Layup":
        return cls(np.linspace(0.0, 1.0, len(configs) + 1), configs)

    @property
    def m(self) -> int:
        return len(self.configs)

    @property
    def m_bar(self) -> int:
        return len(self.distinct_configs)

    def layer_index(self, xi3: float) -> int:
        if not 0.0 <= xi3 <= 1.0:
            raise DomainError("thickness coordinate outside [0, 1]")
        return min(int(np.searchsorted(self.interfaces, xi3, side="right")) - 1, self.m - 1)

    def material_at(self, xi3: float) -> MaterialConfig:
        return self.configs[self.layer_index(xi3)]

    def __repr__(self):
        return f"Layup(m={self.m}, m_bar={self.m_bar})"
