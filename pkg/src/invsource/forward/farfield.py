"""Far-field synthesis for elastic and electromagnetic sources.

Every far field here is a projection of the source's Fourier transform
``F[S](xi) = int S(y) exp(-i xi.y) dy`` evaluated at ``xi = k xhat``:

* elastic, compressional: ``u_p = xhat (F[S](k_p xhat) . xhat)``
* elastic, shear (2D): ``u_s = xhat_perp (F[S](k_s xhat) . xhat_perp)``
* elastic, shear (3D): ``u_s = xhat x (F[S](k_s xhat) x xhat)``
* electric: ``E = i k / (4 pi sqrt(eps)) xhat x (F[J](k xhat) x xhat)``
* magnetic: ``H = sqrt(eps/mu) xhat x E``
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from ..errors import DimensionMismatch, InvalidParameter
from ..geometry import DirectionSet, FrequencyGrid
from ..sources import SourceSpec
from .quadrature import adapted_rule, lattice_rule, lattice_step, transform

__all__ = [
    "ElasticParams",
    "EMParams",
    "FarFieldRecord",
    "FarFieldDataset",
    "source_rules",
    "fourier_transform",
    "elastic_far_field_2d",
    "elastic_far_field_3d",
    "em_far_fields",
    "synthesize_dataset",
]


@dataclass(frozen=True)
class ElasticParams:
    """Lame constants (unit density)."""

    lam: float = 1.0
    mu: float = 1.0

    def __post_init__(self):
        if not (self.mu > 0 and 2 * self.mu + self.lam > 0):
            raise InvalidParameter(f"need mu > 0 and 2 mu + lambda > 0, got {self}")

    def k_p(self, omega):
        return np.asarray(omega) / math.sqrt(self.lam + 2.0 * self.mu)

    def k_s(self, omega):
        return np.asarray(omega) / math.sqrt(self.mu)

    def describe(self) -> dict:
        return {"physics": "elastic", "lambda": self.lam, "mu": self.mu}


@dataclass(frozen=True)
class EMParams:
    """Permittivity and permeability of a homogeneous dielectric."""

    epsilon: float = 1.0
    mu: float = 1.0

    def __post_init__(self):
        if not (self.epsilon > 0 and self.mu > 0):
            raise InvalidParameter(f"need epsilon > 0 and mu > 0, got {self}")

    def k(self, omega):
        return np.asarray(omega) * math.sqrt(self.mu * self.epsilon)

    def omega(self, k):
        return np.asarray(k) / math.sqrt(self.mu * self.epsilon)

    def describe(self) -> dict:
        return {"physics": "em", "epsilon": self.epsilon, "mu": self.mu}


Physics = Union[ElasticParams, EMParams]


@dataclass(frozen=True)
class FarFieldRecord:
    """One (direction, frequency) sample. ``blocks`` maps p/s or E/H to vectors."""

    direction_index: int
    frequency_index: int
    direction: np.ndarray
    frequency: float
    blocks: dict


BLOCK_NAMES = {"elastic": ("p", "s"), "em": ("E", "H")}


@dataclass(frozen=True, eq=False)
class FarFieldDataset:
    """Dense far-field data indexed ``[l, m, component]`` per block.

    For elastic data ``frequencies`` holds circular frequencies; for EM data
    it holds wavenumbers ``k_m``.
    """

    physics: Physics
    directions: DirectionSet
    frequencies: FrequencyGrid
    blocks: dict
    noise_level: float = 0.0
    seed: Optional[int] = None
    source_label: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        shape = (len(self.directions), self.frequencies.count, self.directions.dimension)
        names = BLOCK_NAMES[self.family]
        if set(self.blocks) != set(names):
            raise InvalidParameter(f"blocks must be {names}, got {sorted(self.blocks)}")
        frozen = {}
        for name in names:
            a = np.ascontiguousarray(self.blocks[name], dtype=complex)
            if a.shape != shape:
                raise InvalidParameter(f"block {name} has shape {a.shape}, expected {shape}")
            a.setflags(write=False)
            frozen[name] = a
        object.__setattr__(self, "blocks", frozen)

    @property
    def family(self) -> str:
        return "elastic" if isinstance(self.physics, ElasticParams) else "em"

    @property
    def kind(self) -> str:
        if self.family == "em":
            return "em3d"
        return f"elastic{self.directions.dimension}d"

    @property
    def block_names(self) -> tuple:
        return BLOCK_NAMES[self.family]

    def __len__(self) -> int:
        return len(self.directions) * self.frequencies.count

    def record(self, l: int, m: int) -> FarFieldRecord:
        return FarFieldRecord(
            l, m, self.directions.vectors[l], float(self.frequencies.values[m]),
            {name: self.blocks[name][l, m] for name in self.block_names},
        )

    def replace(self, **changes) -> "FarFieldDataset":
        kw = dict(physics=self.physics, directions=self.directions, frequencies=self.frequencies,
                  blocks=self.blocks, noise_level=self.noise_level, seed=self.seed,
                  source_label=self.source_label, meta=dict(self.meta))
        kw.update(changes)
        return FarFieldDataset(**kw)

    def scaled(self, alpha: complex) -> "FarFieldDataset":
        return self.replace(blocks={k: alpha * v for k, v in self.blocks.items()})

    def __eq__(self, other) -> bool:
        if not isinstance(other, FarFieldDataset):
            return NotImplemented
        return (
            self.physics == other.physics
            and self.directions == other.directions
            and self.frequencies == other.frequencies
            and self.noise_level == other.noise_level
            and self.seed == other.seed
            and self.source_label == other.source_label
            and all(np.array_equal(self.blocks[k], other.blocks[k]) for k in self.block_names)
        )


# --------------------------------------------------------------------------
# Fourier transform of the source


def source_rules(spec: SourceSpec, k_max: float, refine: float = 1.0) -> list:
    return adapted_rule(spec.support, float(k_max), refine)


def fourier_transform(spec: SourceSpec, xi, method: str = "adapted", refine: float = 2.0) -> np.ndarray:
    """``int S(y) exp(-i xi.y) dy`` at one ``(d,)`` or many ``(Q, d)`` points.

    This is the cross-check oracle: by default it uses the support-fitted
    rule with ``refine``-times more nodes per axis than the synthesis
    rule. ``method="lattice"`` switches to the trapezoidal lattice with
    half the synthesis step, valid only for sources vanishing smoothly on
    the boundary.
    """
    xi = np.asarray(xi, dtype=float)
    single = xi.ndim == 1
    xi = np.atleast_2d(xi)
    if xi.shape[1] != spec.dimension:
        raise DimensionMismatch(f"xi has dimension {xi.shape[1]}, source is {spec.dimension}D")
    k_max = float(np.max(np.linalg.norm(xi, axis=1), initial=0.0))
    if method == "adapted":
        rules = source_rules(spec, k_max, refine)
    elif method == "lattice":
        lo, hi = spec.bounding_box()
        h = min(lattice_step(k_max) / refine, float(np.min(hi - lo)) / 200.0)
        rules = lattice_rule(spec.support, h)
    else:
        raise InvalidParameter(f"unknown method {method!r}")
    out = transform(spec, xi, rules)
    return out[0] if single else out


# --------------------------------------------------------------------------
# per-record far fields


def _elastic_blocks(F_p, F_s, xhat):
    """Project transforms ``(..., d)`` onto the p/s polarisations of ``xhat``."""
    u_p = xhat * np.sum(F_p * xhat, axis=-1, keepdims=True)
    if xhat.shape[-1] == 2:
        perp = np.stack([-xhat[..., 1], xhat[..., 0]], axis=-1)
        u_s = perp * np.sum(F_s * perp, axis=-1, keepdims=True)
    else:
        u_s = F_s - xhat * np.sum(F_s * xhat, axis=-1, keepdims=True)
    return u_p, u_s


def _em_blocks(F, xhat, k, params: EMParams):
    tangential = F - xhat * np.sum(F * xhat, axis=-1, keepdims=True)
    E = (1j * k / (4.0 * np.pi * math.sqrt(params.epsilon))) * tangential
    H = math.sqrt(params.epsilon / params.mu) * np.cross(np.broadcast_to(xhat, E.shape), E)
    return E, H


def _check_positive(value, name):
    if not value > 0:
        raise InvalidParameter(f"{name} must be positive, got {value!r}")


def _elastic_single(spec, params, xhat, omega, dim):
    if spec.dimension != dim:
        raise DimensionMismatch(f"need a {dim}D source")
    if not isinstance(params, ElasticParams):
        raise DimensionMismatch("elastic far fields need ElasticParams")
    _check_positive(omega, "omega")
    xhat = np.asarray(xhat.as_array() if hasattr(xhat, "as_array") else xhat, float)
    kp, ks = float(params.k_p(omega)), float(params.k_s(omega))
    rules = source_rules(spec, ks)
    F = transform(spec, np.stack([kp * xhat, ks * xhat]), rules)
    return _elastic_blocks(F[0], F[1], xhat)


def elastic_far_field_2d(spec: SourceSpec, params: ElasticParams, xhat, omega: float):
    """Compressional and shear far-field patterns of a planar source."""
    return _elastic_single(spec, params, xhat, omega, 2)


def elastic_far_field_3d(spec: SourceSpec, params: ElasticParams, xhat, omega: float):
    return _elastic_single(spec, params, xhat, omega, 3)


def em_far_fields(spec: SourceSpec, params: EMParams, xhat, k: float):
    """Electric and magnetic far-field patterns at wavenumber ``k``."""
    if spec.dimension != 3:
        raise DimensionMismatch("electromagnetic sources are 3D")
    _check_positive(k, "k")
    xhat = np.asarray(xhat.as_array() if hasattr(xhat, "as_array") else xhat, float)
    F = transform(spec, (k * xhat)[None], source_rules(spec, k))[0]
    return _em_blocks(F, xhat, k, params)


# --------------------------------------------------------------------------
# whole datasets


def synthesize_dataset(
    spec: SourceSpec,
    params: Physics,
    directions: DirectionSet,
    frequencies: FrequencyGrid,
    refine: float = 1.0,
) -> FarFieldDataset:
    """Noiseless far fields for every (direction, frequency) pair.

    One quadrature rule, sized for the largest wavenumber in the data, is
    shared by all records so the result is deterministic.
    """
    if spec.dimension != directions.dimension:
        raise DimensionMismatch("source and direction set dimensions differ")
    if spec.n_components != spec.dimension:
        raise InvalidParameter("far fields need a vector source")
    X = directions.vectors[:, None, :]
    L, M, d = len(directions), frequencies.count, directions.dimension
    freq = frequencies.values
    if isinstance(params, ElasticParams):
        kp, ks = params.k_p(freq), params.k_s(freq)
        rules = source_rules(spec, float(ks[-1]), refine)
        xi = np.concatenate([(X * kp[None, :, None]).reshape(-1, d), (X * ks[None, :, None]).reshape(-1, d)])
        F = transform(spec, xi, rules)
        F_p, F_s = F[: L * M].reshape(L, M, d), F[L * M:].reshape(L, M, d)
        u_p, u_s = _elastic_blocks(F_p, F_s, X)
        blocks = {"p": u_p, "s": u_s}
    elif isinstance(params, EMParams):
        if d != 3:
            raise DimensionMismatch("electromagnetic data needs 3D directions")
        rules = source_rules(spec, float(freq[-1]), refine)
        F = transform(spec, (X * freq[None, :, None]).reshape(-1, 3), rules).reshape(L, M, 3)
        E, H = _em_blocks(F, X, freq[None, :, None], params)
        blocks = {"E": E, "H": H}
    else:
        raise InvalidParameter(f"unknown physics {params!r}")
    return FarFieldDataset(params, directions, frequencies, blocks, 0.0, None, spec.name)
